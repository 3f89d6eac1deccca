//! Fixed-step velocity-level integration with implicit compliant contact.
//!
//! Each step freezes mass matrix, bias forces and contact geometry at the
//! start of the step and solves
//!
//! ```text
//! M (v − v₀) = δt k₀ + δt Jᵀ f(J v)
//! ```
//!
//! for the next velocities with a damped Newton method, then advances the
//! positions with those velocities.

use std::time::Instant;

use nalgebra::{DMatrix, DVector, Matrix3};

use crate::contact_surface::{
    broadphase, narrowphase, triangulate, ContactSurface, Tessellation,
};
use crate::discrete_contact::{combine_friction, polygon_to_constraint, ContactConstraint, DissipationModel};
use crate::error::{Error, Result};
use crate::mesh::Vec3;
use crate::multibody::{ContactJacobian, MultibodySystem, SystemState};

/// Width (N) of the smoothed corner of the normal positive part.
pub const CLAMP_WIDTH: f64 = 1e-10;

/// Additive floor in the convergence scale.
const RESIDUAL_FLOOR: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// s
    pub dt: f64,
    pub max_newton_iters: usize,
    /// Relative to `‖δt k₀‖ + ‖M v₀‖ + ε`.
    pub residual_tol: f64,
    /// m/s
    pub stiction_velocity: f64,
    /// Step shrink factor of the backtracking line search, in (0, 1).
    pub backtracking: f64,
    pub tessellation: Tessellation,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            max_newton_iters: 100,
            residual_tol: 1e-10,
            stiction_velocity: 1e-4,
            backtracking: 0.5,
            tessellation: Tessellation::Polygonal,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.dt > 0.0
            && self.dt.is_finite()
            && self.stiction_velocity > 0.0
            && self.residual_tol > 0.0
            && self.max_newton_iters > 0
            && self.backtracking > 0.0
            && self.backtracking < 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid solver settings: {self:?}")))
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepDiagnostics {
    pub newton_iterations: usize,
    /// Final momentum residual norm (N·s).
    pub residual: f64,
    pub contact_count: usize,
    pub face_count: usize,
    /// Wall times in seconds.
    pub broadphase_time: f64,
    pub narrowphase_time: f64,
    pub solve_time: f64,
    pub stick_count: usize,
    pub slip_count: usize,
}

/// Interaction properties of one body pair.
#[derive(Clone, Debug, PartialEq)]
pub struct ContactPair {
    pub body_a: usize,
    pub body_b: usize,
    pub friction: f64,
    pub dissipation: DissipationModel,
}

/// Bodies, interacting pairs and gravity.
#[derive(Clone, Debug)]
pub struct World {
    pub system: MultibodySystem,
    pub pairs: Vec<ContactPair>,
    pub gravity: Vec3,
}

impl World {
    /// Every pair of bodies that can touch: both have geometry, at least one
    /// is compliant and at least one is free. Friction is the combined
    /// per-body coefficient.
    pub fn new(system: MultibodySystem, gravity: Vec3, dissipation: DissipationModel) -> Self {
        let mut pairs = Vec::new();
        let bodies = system.bodies();
        for a in 0..bodies.len() {
            for b in a + 1..bodies.len() {
                let (ba, bb) = (&bodies[a], &bodies[b]);
                let (Some(ga), Some(gb)) = (&ba.geometry, &bb.geometry) else {
                    continue;
                };
                if (ga.is_compliant() || gb.is_compliant()) && !(ba.fixed && bb.fixed) {
                    pairs.push(ContactPair {
                        body_a: a,
                        body_b: b,
                        friction: combine_friction(ba.friction, bb.friction),
                        dissipation,
                    });
                }
            }
        }
        Self {
            system,
            pairs,
            gravity,
        }
    }

    /// Contact surfaces of all pairs at positions `q`, with broadphase and
    /// narrowphase wall times.
    pub fn contact_surfaces(
        &self,
        q: &DVector<f64>,
        mode: Tessellation,
    ) -> (Vec<ContactSurface>, f64, f64) {
        let mut broad = 0.0;
        let mut narrow = 0.0;
        let mut surfaces = Vec::with_capacity(self.pairs.len());
        for pair in &self.pairs {
            let ga = self.system.body(pair.body_a).geometry.as_ref().expect("pair has geometry");
            let gb = self.system.body(pair.body_b).geometry.as_ref().expect("pair has geometry");
            let pa = self.system.pose(q, pair.body_a);
            let pb = self.system.pose(q, pair.body_b);
            let t0 = Instant::now();
            let candidates = broadphase(ga, &pa, gb, &pb);
            let t1 = Instant::now();
            let polygons = narrowphase(ga, &pa, gb, &pb, &candidates);
            let mut surface = ContactSurface {
                body_a: pair.body_a,
                body_b: pair.body_b,
                mode: Tessellation::Polygonal,
                polygons,
            };
            if mode == Tessellation::Triangulated {
                surface = triangulate(&surface);
            }
            let t2 = Instant::now();
            broad += (t1 - t0).as_secs_f64();
            narrow += (t2 - t1).as_secs_f64();
            surfaces.push(surface);
        }
        (surfaces, broad, narrow)
    }

    /// One constraint per face with positive effective gradient, in surface
    /// then face order.
    pub fn constraints(&self, surfaces: &[ContactSurface]) -> Vec<ContactConstraint> {
        let mut out = Vec::new();
        for (pair, surface) in self.pairs.iter().zip(surfaces) {
            for (i, poly) in surface.polygons.iter().enumerate() {
                if let Some(mut c) = polygon_to_constraint(poly, pair.friction, &pair.dissipation) {
                    c.body_a = pair.body_a;
                    c.body_b = pair.body_b;
                    c.polygon = i;
                    out.push(c);
                }
            }
        }
        out
    }
}

/// Everything produced by one step.
#[derive(Clone, Debug)]
pub struct StepOutput {
    pub state: SystemState,
    pub surfaces: Vec<ContactSurface>,
    pub constraints: Vec<ContactConstraint>,
    /// Stacked contact-frame forces `[f_t1, f_t2, f_n]` per constraint.
    pub forces: DVector<f64>,
    /// Contact-frame velocities at the solution, same layout as `forces`.
    pub contact_velocities: DVector<f64>,
    pub diagnostics: StepDiagnostics,
}

impl StepOutput {
    pub fn total_normal_force(&self) -> f64 {
        (0..self.constraints.len()).map(|i| self.forces[3 * i + 2]).sum()
    }
}

/// Advance `state` by one step of `config.dt`.
pub fn step(state: &SystemState, world: &World, config: &SolverConfig) -> Result<StepOutput> {
    config.validate()?;
    if !state.is_finite() {
        return Err(Error::NonFinite("state"));
    }
    let sys = &world.system;
    let (surfaces, broadphase_time, narrowphase_time) =
        world.contact_surfaces(&state.q, config.tessellation);
    let constraints = world.constraints(&surfaces);

    let t0 = Instant::now();
    let m = sys.mass_matrix(&state.q);
    let k0 = sys.bias_forces(&state.q, &state.v, &world.gravity);
    let jac = sys.contact_jacobian(&constraints, &state.q);
    let mut diagnostics = StepDiagnostics {
        contact_count: constraints.len(),
        face_count: surfaces.iter().map(|s| s.face_count()).sum(),
        broadphase_time,
        narrowphase_time,
        ..Default::default()
    };
    let solved = solve_velocities(&m, &k0, &jac, &constraints, &state.v, config);
    diagnostics.solve_time = t0.elapsed().as_secs_f64();
    let solution = match solved {
        Ok(s) => s,
        Err(Error::NonConvergence {
            iterations,
            residual,
            last_velocity,
            ..
        }) => {
            diagnostics.newton_iterations = iterations;
            diagnostics.residual = residual;
            return Err(Error::NonConvergence {
                iterations,
                residual,
                last_velocity,
                diagnostics: Box::new(diagnostics),
            });
        }
        Err(e) => return Err(e),
    };
    diagnostics.newton_iterations = solution.iterations;
    diagnostics.residual = solution.residual;
    let vc = jac.multiply(&solution.v);
    for i in 0..constraints.len() {
        let speed = (vc[3 * i].powi(2) + vc[3 * i + 1].powi(2)).sqrt();
        if solution.forces[3 * i + 2] <= 0.0 {
            continue;
        }
        if speed < config.stiction_velocity {
            diagnostics.stick_count += 1;
        } else {
            diagnostics.slip_count += 1;
        }
    }

    let q = sys.advance_positions(&state.q, &solution.v, config.dt);
    let next = SystemState {
        q,
        v: solution.v,
        time: state.time + config.dt,
    };
    if !next.is_finite() {
        return Err(Error::NonFinite("next state"));
    }
    Ok(StepOutput {
        state: next,
        surfaces,
        constraints,
        forces: solution.forces,
        contact_velocities: vc,
        diagnostics,
    })
}

/// Converged velocities, contact forces and Newton statistics.
#[derive(Clone, Debug)]
pub struct VelocitySolution {
    pub v: DVector<f64>,
    pub forces: DVector<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Smoothed `max(x, 0)` and its derivative; exact outside `|x| < CLAMP_WIDTH`.
fn soft_clamp(x: f64) -> (f64, f64) {
    let w = CLAMP_WIDTH;
    if x >= w {
        (x, 1.0)
    } else if x <= -w {
        (0.0, 0.0)
    } else {
        ((x + w) * (x + w) / (4.0 * w), (x + w) / (2.0 * w))
    }
}

/// Contact force of one constraint at contact velocity `u = [u_t1, u_t2, u_n]`
/// and, optionally, its derivative `∂f/∂u`.
pub fn contact_force(c: &ContactConstraint, u: &Vec3, dt: f64, stiction_velocity: f64) -> (Vec3, Matrix3<f64>) {
    let slope = c.stiffness * dt + c.damping;
    let x = -c.stiffness * c.phi0 - slope * u.z;
    let (fn_, dfn_dx) = soft_clamp(x);
    let dfn = -slope * dfn_dx;

    let ut = nalgebra::Vector2::new(u.x, u.y);
    let speed = ut.norm();
    let mu = c.friction;
    let mut g = Matrix3::zeros();
    g[(2, 2)] = dfn;
    let ft;
    if speed <= stiction_velocity {
        let s = mu / stiction_velocity;
        ft = -ut * (s * fn_);
        g[(0, 0)] = -s * fn_;
        g[(1, 1)] = -s * fn_;
        g[(0, 2)] = -s * ut.x * dfn;
        g[(1, 2)] = -s * ut.y * dfn;
    } else {
        let dir = ut / speed;
        ft = -dir * (mu * fn_);
        let proj = nalgebra::Matrix2::identity() - dir * dir.transpose();
        let d = proj * (-mu * fn_ / speed);
        g[(0, 0)] = d[(0, 0)];
        g[(0, 1)] = d[(0, 1)];
        g[(1, 0)] = d[(1, 0)];
        g[(1, 1)] = d[(1, 1)];
        g[(0, 2)] = -mu * dir.x * dfn;
        g[(1, 2)] = -mu * dir.y * dfn;
    }
    (Vec3::new(ft.x, ft.y, fn_), g)
}

struct Evaluation {
    residual: DVector<f64>,
    forces: DVector<f64>,
    derivs: Vec<Matrix3<f64>>,
}

fn evaluate(
    m: &DMatrix<f64>,
    rhs: &DVector<f64>,
    jac: &ContactJacobian,
    constraints: &[ContactConstraint],
    v: &DVector<f64>,
    config: &SolverConfig,
    with_derivs: bool,
) -> Evaluation {
    let nc = constraints.len();
    let mut forces = DVector::zeros(3 * nc);
    let mut derivs = Vec::with_capacity(if with_derivs { nc } else { 0 });
    for (i, c) in constraints.iter().enumerate() {
        let u = jac.contact_velocity(i, v);
        let (f, g) = contact_force(c, &u, config.dt, config.stiction_velocity);
        forces.fixed_rows_mut::<3>(3 * i).copy_from(&f);
        if with_derivs {
            derivs.push(g);
        }
    }
    let residual = m * v - rhs - jac.transpose_multiply(&forces) * config.dt;
    Evaluation {
        residual,
        forces,
        derivs,
    }
}

/// Solve `M (v − v₀) − δt k₀ − δt Jᵀ f(J v) = 0` for `v`.
pub fn solve_velocities(
    m: &DMatrix<f64>,
    k0: &DVector<f64>,
    jac: &ContactJacobian,
    constraints: &[ContactConstraint],
    v0: &DVector<f64>,
    config: &SolverConfig,
) -> Result<VelocitySolution> {
    let nv = v0.len();
    let rhs = m * v0 + k0 * config.dt;
    let scale = (k0 * config.dt).norm() + (m * v0).norm() + RESIDUAL_FLOOR;
    let tol = config.residual_tol * scale;

    // Unconstrained predictor.
    let lu_m = m.clone().lu();
    let mut v = v0 + lu_m.solve(&(k0 * config.dt)).ok_or(Error::NonFinite("mass matrix"))?;
    if constraints.is_empty() {
        let residual = (m * &v - &rhs).norm();
        return Ok(VelocitySolution {
            v,
            forces: DVector::zeros(0),
            iterations: 1,
            residual,
        });
    }

    let dense_j = jac.to_dense();
    let mut eval = evaluate(m, &rhs, jac, constraints, &v, config, true);
    let mut norm = eval.residual.norm();
    for iter in 1..=config.max_newton_iters {
        if norm <= tol {
            return Ok(VelocitySolution {
                v,
                forces: eval.forces,
                iterations: iter - 1,
                residual: norm,
            });
        }
        // Tangent: M − δt Jᵀ G J.
        let mut gj = DMatrix::zeros(dense_j.nrows(), nv);
        for (i, g) in eval.derivs.iter().enumerate() {
            let rows = dense_j.rows(3 * i, 3);
            gj.rows_mut(3 * i, 3).copy_from(&(g * rows));
        }
        let tangent = m - dense_j.transpose() * gj * config.dt;
        let Some(dv) = tangent.lu().solve(&eval.residual) else {
            break;
        };

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let trial = &v - &dv * alpha;
            let e = evaluate(m, &rhs, jac, constraints, &trial, config, true);
            let n = e.residual.norm();
            if n.is_finite() && n <= (1.0 - 1e-4 * alpha) * norm {
                accepted = Some((trial, e, n));
                break;
            }
            alpha *= config.backtracking;
        }
        let (trial, e, n) = match accepted {
            Some(x) => x,
            // No decrease found: take the full step to escape kinks.
            None => {
                let trial = &v - &dv;
                let e = evaluate(m, &rhs, jac, constraints, &trial, config, true);
                let n = e.residual.norm();
                if !n.is_finite() {
                    break;
                }
                (trial, e, n)
            }
        };
        v = trial;
        eval = e;
        norm = n;
        if norm <= tol {
            return Ok(VelocitySolution {
                v,
                forces: eval.forces,
                iterations: iter,
                residual: norm,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: config.max_newton_iters,
        residual: norm,
        last_velocity: v.iter().copied().collect(),
        diagnostics: Box::default(),
    })
}
