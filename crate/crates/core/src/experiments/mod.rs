//! Scenario harness: TOML scenarios, trajectory recording, the spinning-disk
//! benchmark, convergence studies and tessellation reports.

mod disk;
mod record;
mod scenario;
mod study;
mod tessellation;

pub use disk::{coin_scenario, run_spinning_disk, spinning_disk_epsilon, CoinParameters, DiskRun, EPSILON_STAR};
pub use record::{
    run_scenario, run_scenario_with, FileObserver, NoObserver, RunObserver, RunOptions, RunResult, RunStats,
    step_with_retry, TrajectoryRecord, TrajectoryRow, TRAJECTORY_SCHEMA,
};
pub use scenario::{BodySpec, DiskExperiment, GeometrySpec, PairSpec, Scenario};
pub use study::{convergence_study, fit_slope, trajectory_error, StudyResult, Sweep, STUDY_SCHEMA};
pub use tessellation::{tessellation_report, TessellationReport, TessellationRow, TESSELLATION_SCHEMA};
