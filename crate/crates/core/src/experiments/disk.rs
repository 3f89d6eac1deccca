//! Spinning-disk benchmark: a coin spinning and sliding on a rigid plane.
//!
//! For uniform pressure under the disk the ratio ε = ‖v‖/(ωR) tends to a
//! universal terminal value as the coin comes to rest.

use std::path::PathBuf;

use crate::error::{Error, Result};

use super::record::{run_scenario_with, RunObserver, RunOptions, RunResult, TrajectoryRecord, TrajectoryRow};
use super::scenario::{BodySpec, DiskExperiment, GeometrySpec, Scenario};
use crate::stepper::SolverConfig;

/// Terminal ratio for a disk with uniform contact pressure.
pub const EPSILON_STAR: f64 = 0.653;

/// Physical parameters of the coin benchmark.
#[derive(Clone, Debug, PartialEq)]
pub struct CoinParameters {
    pub radius: f64,
    pub thickness: f64,
    pub mass: f64,
    pub friction: f64,
    pub modulus: f64,
    pub tau: f64,
    /// Initial spin (rad/s).
    pub spin: f64,
    pub resolution: f64,
    pub dt: f64,
    pub duration: f64,
    pub cutoff: f64,
}

impl Default for CoinParameters {
    fn default() -> Self {
        Self {
            radius: 1.213e-2,
            thickness: 1.75e-3,
            mass: 5.67e-3,
            friction: 0.2,
            modulus: 1e9,
            tau: 0.005,
            spin: 50.0,
            resolution: 1.5e-3,
            dt: 1e-3,
            duration: 4.0,
            cutoff: 0.5,
        }
    }
}

/// Coin lying flat on an anchored rigid plane, spinning at `spin` about the
/// vertical and sliding along +x at `epsilon0 · spin · radius`.
pub fn coin_scenario(params: &CoinParameters, epsilon0: f64) -> Scenario {
    let p = params;
    Scenario {
        name: format!("coin_eps{epsilon0}"),
        duration: p.duration,
        record_stride: 1,
        gravity: [0.0, 0.0, -9.81],
        tau: p.tau,
        solver: SolverConfig {
            dt: p.dt,
            ..SolverConfig::default()
        },
        bodies: vec![
            BodySpec {
                name: "ground".into(),
                geometry: GeometrySpec::RigidPlane { half_extent: 50.0 },
                fixed: true,
                mass: None,
                inertia: None,
                friction: p.friction,
                position: [0.0; 3],
                orientation: [1.0, 0.0, 0.0, 0.0],
                velocity: [0.0; 3],
                angular_velocity: [0.0; 3],
            },
            BodySpec {
                name: "coin".into(),
                geometry: GeometrySpec::Cylinder {
                    radius: p.radius,
                    height: p.thickness,
                    modulus: p.modulus,
                    resolution: p.resolution,
                },
                fixed: false,
                mass: Some(p.mass),
                inertia: None,
                friction: p.friction,
                position: [0.0, 0.0, 0.5 * p.thickness],
                orientation: [1.0, 0.0, 0.0, 0.0],
                velocity: [epsilon0 * p.spin * p.radius, 0.0, 0.0],
                angular_velocity: [0.0, 0.0, p.spin],
            },
        ],
        pairs: Vec::new(),
        experiment: Some(DiskExperiment {
            body: "coin".into(),
            radius: p.radius,
            cutoff: p.cutoff,
        }),
        base_dir: None::<PathBuf>,
    }
}

/// Terminal slip-to-spin ratio from a recorded spin-down.
///
/// ε(t) = ‖v_xy‖/(|ω_z| R) is evaluated while |ω_z| ≥ `cutoff`; the estimate
/// is the last such sample. `body` is the column of the disk in the record.
pub fn spinning_disk_epsilon(record: &TrajectoryRecord, body: usize, radius: f64, cutoff: f64) -> Result<f64> {
    let spin = |r: &TrajectoryRow| r.velocities[body][2].abs();
    let first = record.rows.first().ok_or(Error::NoSpin)?;
    if spin(first) < cutoff {
        return Err(Error::NoSpin);
    }
    let last = record.rows.last().expect("non-empty");
    if spin(last) >= cutoff {
        return Err(Error::DidNotStop);
    }
    let row = record
        .rows
        .iter()
        .take_while(|r| spin(r) >= cutoff)
        .last()
        .expect("first row qualifies");
    let v = &row.velocities[body];
    Ok(v[3].hypot(v[4]) / (spin(row) * radius))
}

struct StopBelowCutoff {
    column: usize,
    cutoff: f64,
}

impl RunObserver for StopBelowCutoff {
    fn should_stop(&mut self, row: &TrajectoryRow) -> bool {
        row.velocities[self.column][2].abs() < self.cutoff
    }
}

/// Outcome of one spin-down.
#[derive(Clone, Debug)]
pub struct DiskRun {
    pub epsilon: f64,
    /// Time at which the spin fell below the cutoff.
    pub stop_time: f64,
    pub result: RunResult,
}

/// Run a scenario with an `[experiment]` table until the disk stops and
/// estimate the terminal ratio.
pub fn run_spinning_disk(scenario: &Scenario, options: RunOptions) -> Result<DiskRun> {
    let (body, exp) = scenario.disk()?;
    let column = (0..body).filter(|&i| !scenario.bodies[i].fixed).count();
    if scenario.bodies[body].fixed {
        return Err(Error::Config("disk body must be free".into()));
    }
    if scenario.bodies[body].angular_velocity[2].abs() < exp.cutoff {
        return Err(Error::NoSpin);
    }
    let mut stop = StopBelowCutoff {
        column,
        cutoff: exp.cutoff,
    };
    let result = run_scenario_with(scenario, options, &mut stop)?;
    let epsilon = spinning_disk_epsilon(&result.record, column, exp.radius, exp.cutoff)?;
    let stop_time = result.record.rows.last().map_or(0.0, |r| r.time);
    Ok(DiskRun {
        epsilon,
        stop_time,
        result,
    })
}
