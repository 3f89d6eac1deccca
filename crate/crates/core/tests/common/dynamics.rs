//! Per-step checks of the contact forces returned by the stepper, computed
//! from the constraints and the Jacobian independently of the solver.

use std::path::PathBuf;

use hydroelastic::experiments::Scenario;
use hydroelastic::mesh::Vec3;
use hydroelastic::multibody::SystemState;
use hydroelastic::stepper::{step, SolverConfig, StepOutput, World};
use nalgebra::Vector6;

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(format!("{name}.toml"))
}

pub fn load_scenario(name: &str) -> Scenario {
    Scenario::load(scenario_path(name)).unwrap()
}

/// Worst values seen over a run; all should be at or below zero apart from
/// the relative errors, which should be tiny.
#[derive(Clone, Copy, Debug, Default)]
pub struct ForceChecks {
    pub steps: usize,
    pub contacts: usize,
    /// max(‖f_t‖ − μ f_n)
    pub cone_excess: f64,
    /// max(f_t · u_t)
    pub friction_power: f64,
    /// max(−f_n)
    pub negative_normal: f64,
    /// max relative mismatch between the generalized contact wrench and
    /// ±(F, x × F) about the world origin.
    pub action_reaction: f64,
}

impl ForceChecks {
    pub fn merge(&mut self, o: &ForceChecks) {
        self.steps += o.steps;
        self.contacts += o.contacts;
        self.cone_excess = self.cone_excess.max(o.cone_excess);
        self.friction_power = self.friction_power.max(o.friction_power);
        self.negative_normal = self.negative_normal.max(o.negative_normal);
        self.action_reaction = self.action_reaction.max(o.action_reaction);
    }
}

pub fn check_forces(world: &World, before: &SystemState, out: &StepOutput) -> ForceChecks {
    let sys = &world.system;
    let jac = sys.contact_jacobian(&out.constraints, &before.q);
    let mut c = ForceChecks {
        steps: 1,
        contacts: out.constraints.len(),
        cone_excess: f64::NEG_INFINITY,
        friction_power: f64::NEG_INFINITY,
        negative_normal: f64::NEG_INFINITY,
        action_reaction: 0.0,
    };
    for (i, con) in out.constraints.iter().enumerate() {
        let f = Vec3::new(out.forces[3 * i], out.forces[3 * i + 1], out.forces[3 * i + 2]);
        let u = Vec3::new(
            out.contact_velocities[3 * i],
            out.contact_velocities[3 * i + 1],
            out.contact_velocities[3 * i + 2],
        );
        c.cone_excess = c.cone_excess.max(f.xy().norm() - con.friction * f.z);
        c.friction_power = c.friction_power.max(f.x * u.x + f.y * u.y);
        c.negative_normal = c.negative_normal.max(-f.z);

        // World force on B, and the wrench it exerts about the origin.
        let world_f = con.frame.to_world(&f);
        let expected = Vector6::new(0.0, 0.0, 0.0, world_f.x, world_f.y, world_f.z);
        let moment = con.point.cross(&world_f);
        let expected = Vector6::new(moment.x, moment.y, moment.z, expected[3], expected[4], expected[5]);
        let scale = world_f.norm() * (1.0 + con.point.norm()) + 1e-300;
        let block = &jac.blocks[i];
        for (side, sign) in [(&block.a, -1.0), (&block.b, 1.0)] {
            let Some((o, m)) = side else { continue };
            let gen = m.transpose() * f;
            let body = sys.bodies().iter().enumerate().find(|(k, _)| sys.velocity_offset(*k) == Some(*o)).unwrap().0;
            let com = sys.pose(&before.q, body).translation.vector;
            let tau = Vec3::new(gen[0], gen[1], gen[2]);
            let lin = Vec3::new(gen[3], gen[4], gen[5]);
            let about_origin = tau + com.cross(&lin);
            let got = Vector6::new(about_origin.x, about_origin.y, about_origin.z, lin.x, lin.y, lin.z);
            c.action_reaction = c.action_reaction.max((got - expected * sign).norm() / scale);
        }
    }
    c
}

/// Run `steps` steps, checking every one.
pub fn run_checked(world: &World, state: &SystemState, config: &SolverConfig, steps: usize) -> (SystemState, StepOutput, ForceChecks) {
    let mut checks = ForceChecks::default();
    let mut s = state.clone();
    let mut last = None;
    for _ in 0..steps {
        let out = step(&s, world, config).unwrap();
        checks.merge(&check_forces(world, &s, &out));
        s = out.state.clone();
        last = Some(out);
    }
    (s, last.expect("at least one step"), checks)
}
