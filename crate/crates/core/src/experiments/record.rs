//! Running scenarios and recording trajectories.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::stepper::{step, SolverConfig, StepDiagnostics, StepOutput, World};
use crate::multibody::SystemState;

use super::scenario::Scenario;

pub const TRAJECTORY_SCHEMA: &str = "hydroelastic-trajectory/1";

/// One recorded sample.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRow {
    pub time: f64,
    /// Per free body `[x, y, z, qw, qx, qy, qz]`.
    pub poses: Vec<[f64; 7]>,
    /// Per free body `[ωx, ωy, ωz, vx, vy, vz]`.
    pub velocities: Vec<[f64; 6]>,
    pub contact_count: usize,
    /// Σ f_n over the step ending at `time` (N).
    pub normal_force: f64,
    /// Slip-to-spin ratio of the disk body, when defined.
    pub epsilon: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrajectoryRecord {
    /// Names of the free bodies, in column order.
    pub bodies: Vec<String>,
    pub rows: Vec<TrajectoryRow>,
}

impl TrajectoryRecord {
    /// Stacked translations of all free bodies over all rows.
    pub fn positions(&self) -> Vec<f64> {
        self.rows
            .iter()
            .flat_map(|r| r.poses.iter().flat_map(|p| p[..3].to_vec()))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# schema: {TRAJECTORY_SCHEMA}");
        s.push('t');
        for b in &self.bodies {
            for c in ["x", "y", "z", "qw", "qx", "qy", "qz", "wx", "wy", "wz", "vx", "vy", "vz"] {
                let _ = write!(s, ",{b}.{c}");
            }
        }
        s.push_str(",contacts,normal_force,epsilon\n");
        for r in &self.rows {
            let _ = write!(s, "{}", r.time);
            for (p, v) in r.poses.iter().zip(&r.velocities) {
                for x in p.iter().chain(v.iter()) {
                    let _ = write!(s, ",{x}");
                }
            }
            let _ = write!(s, ",{},{},", r.contact_count, r.normal_force);
            if let Some(e) = r.epsilon {
                let _ = write!(s, "{e}");
            }
            s.push('\n');
        }
        s
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Mean per-step wall times (s) and solver statistics of a run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunStats {
    pub steps: usize,
    /// Steps redone as two half steps after a solver failure.
    pub retries: usize,
    pub mean_broadphase: f64,
    pub mean_narrowphase: f64,
    pub mean_solve: f64,
    pub mean_newton_iterations: f64,
    pub max_newton_iterations: usize,
    pub mean_contacts: f64,
}

impl RunStats {
    fn add(&mut self, d: &StepDiagnostics) {
        self.steps += 1;
        self.mean_broadphase += d.broadphase_time;
        self.mean_narrowphase += d.narrowphase_time;
        self.mean_solve += d.solve_time;
        self.mean_newton_iterations += d.newton_iterations as f64;
        self.max_newton_iterations = self.max_newton_iterations.max(d.newton_iterations);
        self.mean_contacts += d.contact_count as f64;
    }

    fn finish(&mut self) {
        let n = self.steps.max(1) as f64;
        self.mean_broadphase /= n;
        self.mean_narrowphase /= n;
        self.mean_solve /= n;
        self.mean_newton_iterations /= n;
        self.mean_contacts /= n;
    }

    /// Key-value text, one entry per line.
    pub fn to_text(&self) -> String {
        format!(
            "steps {}\nretries {}\nmean_broadphase_ms {:.6}\nmean_narrowphase_ms {:.6}\nmean_solve_ms {:.6}\nmean_newton_iterations {:.3}\nmax_newton_iterations {}\nmean_contacts {:.3}\n",
            self.steps,
            self.retries,
            self.mean_broadphase * 1e3,
            self.mean_narrowphase * 1e3,
            self.mean_solve * 1e3,
            self.mean_newton_iterations,
            self.max_newton_iterations,
            self.mean_contacts
        )
    }
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub record: TrajectoryRecord,
    pub stats: RunStats,
    pub final_state: SystemState,
}

/// Hooks into a running simulation.
pub trait RunObserver {
    /// Called after every accepted step (1-based index).
    fn on_step(&mut self, _step: usize, _output: &StepOutput) -> Result<()> {
        Ok(())
    }

    /// Stop early after recording `row`.
    fn should_stop(&mut self, _row: &TrajectoryRow) -> bool {
        false
    }
}

/// Observer that does nothing.
pub struct NoObserver;

impl RunObserver for NoObserver {}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Redo a failed step once as two steps of half size.
    pub retry_half_step: bool,
}

/// Run a scenario for its full duration.
pub fn run_scenario(scenario: &Scenario) -> Result<RunResult> {
    run_scenario_with(scenario, RunOptions::default(), &mut NoObserver)
}

pub fn run_scenario_with(
    scenario: &Scenario,
    options: RunOptions,
    observer: &mut dyn RunObserver,
) -> Result<RunResult> {
    let (world, state) = scenario.build()?;
    let disk = scenario.experiment.as_ref().map(|e| (scenario.body_index(&e.body), e.radius));
    let disk = match disk {
        Some((idx, r)) => Some((idx?, r)),
        None => None,
    };
    let free: Vec<usize> = (0..world.system.num_bodies())
        .filter(|&i| !world.system.body(i).fixed)
        .collect();
    let mut record = TrajectoryRecord {
        bodies: free.iter().map(|&i| world.system.body(i).name.clone()).collect(),
        rows: Vec::new(),
    };
    let config = scenario.solver.clone();
    let row_of = |state: &SystemState, time: f64, contacts: usize, force: f64| {
        let mut poses = Vec::with_capacity(free.len());
        let mut vels = Vec::with_capacity(free.len());
        for &i in &free {
            let oq = world.system.position_offset(i).expect("free");
            let ov = world.system.velocity_offset(i).expect("free");
            let q = &state.q;
            poses.push([q[oq + 4], q[oq + 5], q[oq + 6], q[oq], q[oq + 1], q[oq + 2], q[oq + 3]]);
            let mut v = [0.0; 6];
            v.copy_from_slice(&state.v.as_slice()[ov..ov + 6]);
            vels.push(v);
        }
        let epsilon = disk.and_then(|(i, r)| {
            let (w, v) = world.system.spatial_velocity(&state.v, i);
            let spin = w.z.abs();
            (spin > 0.0).then(|| v.xy().norm() / (spin * r))
        });
        TrajectoryRow {
            time,
            poses,
            velocities: vels,
            contact_count: contacts,
            normal_force: force,
            epsilon,
        }
    };

    let mut stats = RunStats::default();
    let mut state = state;
    record.rows.push(row_of(&state, 0.0, 0, 0.0));
    let steps = scenario.step_count();
    let stride = scenario.record_stride;
    for k in 1..=steps {
        let time = k as f64 * config.dt;
        let (output, retried) =
            step_with_retry(&state, &world, &config, options).map_err(|e| Error::StepFailed {
                time,
                source: Box::new(e),
            })?;
        stats.retries += usize::from(retried);
        stats.add(&output.diagnostics);
        observer.on_step(k, &output)?;
        state = output.state.clone();
        state.time = time;
        if k % stride == 0 {
            let row = row_of(&state, time, output.constraints.len(), output.total_normal_force());
            let stop = observer.should_stop(&row);
            record.rows.push(row);
            if stop {
                break;
            }
        }
    }
    stats.finish();
    Ok(RunResult {
        record,
        stats,
        final_state: state,
    })
}

/// One step of size `config.dt`; the flag reports whether it had to be
/// redone as two half steps.
pub fn step_with_retry(
    state: &SystemState,
    world: &World,
    config: &SolverConfig,
    options: RunOptions,
) -> Result<(StepOutput, bool)> {
    match step(state, world, config) {
        Ok(out) => Ok((out, false)),
        Err(Error::NonConvergence { .. }) if options.retry_half_step => {
            let half = SolverConfig {
                dt: config.dt / 2.0,
                ..config.clone()
            };
            let first = step(state, world, &half)?;
            step(&first.state, world, &half).map(|out| (out, true))
        }
        Err(e) => Err(e),
    }
}

/// Observer writing polygon-soup snapshots and constraint dumps.
pub struct FileObserver<'a> {
    pub out_dir: &'a Path,
    pub snapshot_every: Option<usize>,
    pub constraints: Option<std::io::BufWriter<std::fs::File>>,
}

impl<'a> FileObserver<'a> {
    pub fn new(out_dir: &'a Path, snapshot_every: Option<usize>, dump_constraints: bool) -> Result<Self> {
        let constraints = if dump_constraints {
            let mut f = std::io::BufWriter::new(std::fs::File::create(out_dir.join("constraints.csv"))?);
            writeln!(f, "{}", crate::discrete_contact::CONSTRAINT_CSV_HEADER)?;
            Some(f)
        } else {
            None
        };
        Ok(Self {
            out_dir,
            snapshot_every,
            constraints,
        })
    }
}

impl RunObserver for FileObserver<'_> {
    fn on_step(&mut self, step: usize, output: &StepOutput) -> Result<()> {
        if let Some(every) = self.snapshot_every {
            if every > 0 && step % every == 0 {
                let path = self.out_dir.join(format!("surface_{step:06}.txt"));
                let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
                crate::contact_surface::write_polygon_soup(&mut f, &output.surfaces)?;
            }
        }
        if let Some(f) = &mut self.constraints {
            crate::discrete_contact::write_constraints_csv(f, step, output.state.time, &output.constraints)?;
        }
        Ok(())
    }
}
