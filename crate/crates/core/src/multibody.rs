//! Free-floating rigid bodies: state layout, inertia, generalized forces and
//! contact Jacobians.
//!
//! Each free body owns seven position coordinates `[qw, qx, qy, qz, x, y, z]`
//! and six velocity coordinates `[ωx, ωy, ωz, vx, vy, vz]`, with the angular
//! velocity expressed in the world frame. The body origin is its center of
//! mass. Fixed bodies own no coordinates.

use nalgebra::{DMatrix, DVector, Matrix3, Matrix3x6, Quaternion, Translation3, UnitQuaternion};

use crate::contact_surface::ContactGeometry;
use crate::discrete_contact::ContactConstraint;
use crate::error::{Error, Result};
use crate::mesh::{RigidPose, Vec3};

pub const NQ_PER_BODY: usize = 7;
pub const NV_PER_BODY: usize = 6;

#[derive(Clone, Debug)]
pub struct RigidBody {
    pub name: String,
    /// kg; ignored for fixed bodies.
    pub mass: f64,
    /// Body-frame inertia about the origin (kg·m²).
    pub inertia: Matrix3<f64>,
    pub fixed: bool,
    /// Pose of a fixed body; initial pose otherwise.
    pub pose: RigidPose,
    /// Per-body friction coefficient, combined pairwise.
    pub friction: f64,
    pub geometry: Option<ContactGeometry>,
}

impl RigidBody {
    pub fn free(name: impl Into<String>, mass: f64, inertia: Matrix3<f64>) -> Self {
        Self {
            name: name.into(),
            mass,
            inertia,
            fixed: false,
            pose: RigidPose::identity(),
            friction: 0.0,
            geometry: None,
        }
    }

    pub fn anchored(name: impl Into<String>, pose: RigidPose) -> Self {
        Self {
            name: name.into(),
            mass: 0.0,
            inertia: Matrix3::zeros(),
            fixed: true,
            pose,
            friction: 0.0,
            geometry: None,
        }
    }

    pub fn with_geometry(mut self, geometry: ContactGeometry) -> Self {
        self.geometry = Some(geometry);
        self
    }

    pub fn with_friction(mut self, mu: f64) -> Self {
        self.friction = mu;
        self
    }

    pub fn with_pose(mut self, pose: RigidPose) -> Self {
        self.pose = pose;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.friction >= 0.0 && self.friction.is_finite()) {
            return Err(Error::Config(format!("body '{}': friction must be >= 0", self.name)));
        }
        if self.fixed {
            return Ok(());
        }
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::Config(format!("body '{}': mass must be > 0", self.name)));
        }
        let sym = (self.inertia - self.inertia.transpose()).norm();
        let spd = self.inertia.cholesky().is_some();
        if sym > 1e-12 * self.inertia.norm() || !spd {
            return Err(Error::Config(format!(
                "body '{}': inertia must be symmetric positive definite",
                self.name
            )));
        }
        Ok(())
    }
}

/// Generalized positions, velocities and time.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemState {
    pub q: DVector<f64>,
    pub v: DVector<f64>,
    pub time: f64,
}

impl SystemState {
    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(self.v.iter()).all(|x| x.is_finite()) && self.time.is_finite()
    }
}

/// Three rows (`t1, t2, n`) of one contact, split into the blocks acting on
/// the velocities of bodies A and B. A missing block means a fixed body.
#[derive(Clone, Debug, PartialEq)]
pub struct JacobianBlock {
    pub a: Option<(usize, Matrix3x6<f64>)>,
    pub b: Option<(usize, Matrix3x6<f64>)>,
}

/// Maps generalized velocities to stacked contact-frame relative velocities
/// `[v_t1, v_t2, v_n]` of B with respect to A, one triple per contact.
#[derive(Clone, Debug, PartialEq)]
pub struct ContactJacobian {
    pub blocks: Vec<JacobianBlock>,
    pub nv: usize,
}

impl ContactJacobian {
    pub fn num_contacts(&self) -> usize {
        self.blocks.len()
    }

    /// Relative velocity of contact `i` in its frame.
    pub fn contact_velocity(&self, i: usize, v: &DVector<f64>) -> Vec3 {
        let mut out = Vec3::zeros();
        let blk = &self.blocks[i];
        for (offset, m) in blk.a.iter().chain(blk.b.iter()) {
            out += m * v.fixed_rows::<6>(*offset);
        }
        out
    }

    pub fn multiply(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(3 * self.blocks.len());
        for i in 0..self.blocks.len() {
            out.fixed_rows_mut::<3>(3 * i).copy_from(&self.contact_velocity(i, v));
        }
        out
    }

    /// `Jᵀ f` for stacked contact forces `f`.
    pub fn transpose_multiply(&self, f: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.nv);
        for (i, blk) in self.blocks.iter().enumerate() {
            let fi = f.fixed_rows::<3>(3 * i);
            for (offset, m) in blk.a.iter().chain(blk.b.iter()) {
                let mut dst = out.fixed_rows_mut::<6>(*offset);
                dst += m.transpose() * fi;
            }
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(3 * self.blocks.len(), self.nv);
        for (i, blk) in self.blocks.iter().enumerate() {
            for (offset, m) in blk.a.iter().chain(blk.b.iter()) {
                let mut dst = j.fixed_view_mut::<3, 6>(3 * i, *offset);
                dst += m;
            }
        }
        j
    }
}

/// Rigid bodies plus the mapping from body index to coordinate offsets.
#[derive(Clone, Debug)]
pub struct MultibodySystem {
    bodies: Vec<RigidBody>,
    /// Index among free bodies, `None` for fixed ones.
    slot: Vec<Option<usize>>,
    free_count: usize,
}

impl MultibodySystem {
    pub fn new(bodies: Vec<RigidBody>) -> Result<Self> {
        let mut slot = Vec::with_capacity(bodies.len());
        let mut free_count = 0;
        for b in &bodies {
            b.validate()?;
            if b.fixed {
                slot.push(None);
            } else {
                slot.push(Some(free_count));
                free_count += 1;
            }
        }
        Ok(Self {
            bodies,
            slot,
            free_count,
        })
    }

    pub fn bodies(&self) -> &[RigidBody] {
        &self.bodies
    }

    pub fn body(&self, i: usize) -> &RigidBody {
        &self.bodies[i]
    }

    pub fn num_bodies(&self) -> usize {
        self.bodies.len()
    }

    pub fn nq(&self) -> usize {
        NQ_PER_BODY * self.free_count
    }

    pub fn nv(&self) -> usize {
        NV_PER_BODY * self.free_count
    }

    /// Offset of body `i` in the velocity vector.
    pub fn velocity_offset(&self, i: usize) -> Option<usize> {
        self.slot[i].map(|s| NV_PER_BODY * s)
    }

    pub fn position_offset(&self, i: usize) -> Option<usize> {
        self.slot[i].map(|s| NQ_PER_BODY * s)
    }

    /// State built from the bodies' initial poses and the given initial
    /// `(ω, v)` per body (ignored for fixed bodies).
    pub fn initial_state(&self, velocities: &[(Vec3, Vec3)]) -> SystemState {
        let mut q = DVector::zeros(self.nq());
        let mut v = DVector::zeros(self.nv());
        for (i, body) in self.bodies.iter().enumerate() {
            if let Some(o) = self.position_offset(i) {
                write_pose(&mut q, o, &body.pose);
            }
            if let (Some(o), Some((w, lin))) = (self.velocity_offset(i), velocities.get(i)) {
                v.fixed_rows_mut::<3>(o).copy_from(w);
                v.fixed_rows_mut::<3>(o + 3).copy_from(lin);
            }
        }
        SystemState { q, v, time: 0.0 }
    }

    pub fn pose(&self, q: &DVector<f64>, i: usize) -> RigidPose {
        match self.position_offset(i) {
            Some(o) => read_pose(q, o),
            None => self.bodies[i].pose,
        }
    }

    /// `(ω, v)` of body `i`; zero for fixed bodies.
    pub fn spatial_velocity(&self, v: &DVector<f64>, i: usize) -> (Vec3, Vec3) {
        match self.velocity_offset(i) {
            Some(o) => (
                v.fixed_rows::<3>(o).into_owned(),
                v.fixed_rows::<3>(o + 3).into_owned(),
            ),
            None => (Vec3::zeros(), Vec3::zeros()),
        }
    }

    /// World velocity of the material point of body `i` currently at `x`.
    pub fn point_velocity(&self, q: &DVector<f64>, v: &DVector<f64>, i: usize, x: &Vec3) -> Vec3 {
        let (w, lin) = self.spatial_velocity(v, i);
        let r = x - self.pose(q, i).translation.vector;
        lin + w.cross(&r)
    }

    pub fn world_inertia(&self, q: &DVector<f64>, i: usize) -> Matrix3<f64> {
        let r = self.pose(q, i).rotation.to_rotation_matrix();
        r.matrix() * self.bodies[i].inertia * r.matrix().transpose()
    }

    /// Block-diagonal mass matrix over free bodies.
    pub fn mass_matrix(&self, q: &DVector<f64>) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nv(), self.nv());
        for i in 0..self.bodies.len() {
            if let Some(o) = self.velocity_offset(i) {
                m.fixed_view_mut::<3, 3>(o, o).copy_from(&self.world_inertia(q, i));
                m.fixed_view_mut::<3, 3>(o + 3, o + 3)
                    .copy_from(&(Matrix3::identity() * self.bodies[i].mass));
            }
        }
        m
    }

    /// Gravity plus gyroscopic torque `−ω × (I ω)` per free body.
    pub fn bias_forces(&self, q: &DVector<f64>, v: &DVector<f64>, gravity: &Vec3) -> DVector<f64> {
        let mut k = DVector::zeros(self.nv());
        for i in 0..self.bodies.len() {
            if let Some(o) = self.velocity_offset(i) {
                let w: Vec3 = v.fixed_rows::<3>(o).into_owned();
                let gyro = -w.cross(&(self.world_inertia(q, i) * w));
                k.fixed_rows_mut::<3>(o).copy_from(&gyro);
                k.fixed_rows_mut::<3>(o + 3).copy_from(&(gravity * self.bodies[i].mass));
            }
        }
        k
    }

    fn body_block(&self, q: &DVector<f64>, i: usize, x: &Vec3, axes: &[Vec3; 3], sign: f64) -> Option<(usize, Matrix3x6<f64>)> {
        let o = self.velocity_offset(i)?;
        let r = x - self.pose(q, i).translation.vector;
        let mut m = Matrix3x6::zeros();
        for (row, e) in axes.iter().enumerate() {
            let rot = r.cross(e) * sign;
            let lin = e * sign;
            for c in 0..3 {
                m[(row, c)] = rot[c];
                m[(row, c + 3)] = lin[c];
            }
        }
        Some((o, m))
    }

    pub fn contact_jacobian(&self, constraints: &[ContactConstraint], q: &DVector<f64>) -> ContactJacobian {
        let blocks = constraints
            .iter()
            .map(|c| {
                let axes = c.frame.axes();
                JacobianBlock {
                    a: self.body_block(q, c.body_a, &c.point, &axes, -1.0),
                    b: self.body_block(q, c.body_b, &c.point, &axes, 1.0),
                }
            })
            .collect();
        ContactJacobian {
            blocks,
            nv: self.nv(),
        }
    }

    /// Explicit position update with next-step velocities; quaternions are
    /// renormalized.
    pub fn advance_positions(&self, q: &DVector<f64>, v: &DVector<f64>, dt: f64) -> DVector<f64> {
        advance_positions(q, v, dt)
    }

    /// Kinetic energy `½ vᵀ M v`.
    pub fn kinetic_energy(&self, state: &SystemState) -> f64 {
        let m = self.mass_matrix(&state.q);
        0.5 * state.v.dot(&(m * &state.v))
    }
}

/// Position update `q + δt·N(q)·v` for a stack of free bodies.
pub fn advance_positions(q: &DVector<f64>, v: &DVector<f64>, dt: f64) -> DVector<f64> {
    let mut out = q.clone();
    let n = q.len() / NQ_PER_BODY;
    for b in 0..n {
        let (oq, ov) = (NQ_PER_BODY * b, NV_PER_BODY * b);
        let quat = Quaternion::new(q[oq], q[oq + 1], q[oq + 2], q[oq + 3]);
        let w = Quaternion::new(0.0, v[ov], v[ov + 1], v[ov + 2]);
        let rate = w * quat * 0.5;
        let next = (quat + rate * dt).normalize();
        out[oq] = next.w;
        out[oq + 1] = next.i;
        out[oq + 2] = next.j;
        out[oq + 3] = next.k;
        for k in 0..3 {
            out[oq + 4 + k] = q[oq + 4 + k] + dt * v[ov + 3 + k];
        }
    }
    out
}

fn read_pose(q: &DVector<f64>, o: usize) -> RigidPose {
    let rot = UnitQuaternion::new_unchecked(Quaternion::new(q[o], q[o + 1], q[o + 2], q[o + 3]));
    RigidPose::from_parts(Translation3::new(q[o + 4], q[o + 5], q[o + 6]), rot)
}

fn write_pose(q: &mut DVector<f64>, o: usize, pose: &RigidPose) {
    let r = pose.rotation.quaternion();
    q[o] = r.w;
    q[o + 1] = r.i;
    q[o + 2] = r.j;
    q[o + 3] = r.k;
    q[o + 4] = pose.translation.vector.x;
    q[o + 5] = pose.translation.vector.y;
    q[o + 6] = pose.translation.vector.z;
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn one_body() -> MultibodySystem {
        MultibodySystem::new(vec![
            RigidBody::anchored("ground", RigidPose::identity()),
            RigidBody::free("ball", 2.0, Matrix3::identity() * 0.1),
        ])
        .unwrap()
    }

    #[test]
    fn mass_matrix_of_sphere_like_body() {
        let sys = one_body();
        let s = sys.initial_state(&[]);
        let m = sys.mass_matrix(&s.q);
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![0.1, 0.1, 0.1, 2.0, 2.0, 2.0]));
        assert_eq!(m, expected);
        assert_eq!(sys.nv(), 6);
        assert_eq!(sys.velocity_offset(0), None);
    }

    #[test]
    fn gravity_only_at_rest() {
        let sys = one_body();
        let s = sys.initial_state(&[]);
        let k = sys.bias_forces(&s.q, &s.v, &Vec3::new(0.0, 0.0, -9.81));
        assert_eq!(k.as_slice(), &[0.0, 0.0, 0.0, 0.0, 0.0, -19.62]);
    }

    #[test]
    fn zero_velocity_leaves_positions() {
        let q = DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0, 1.0, 2.0, 3.0]);
        assert_eq!(advance_positions(&q, &DVector::zeros(6), 1e-3), q);
    }

    #[test]
    fn small_yaw_step() {
        let q = DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let v = DVector::from_vec(vec![0.0, 0.0, std::f64::consts::PI, 0.0, 0.0, 0.0]);
        let next = advance_positions(&q, &v, 1e-3);
        let yaw = 2.0 * next[3].atan2(next[0]);
        assert_relative_eq!(yaw, std::f64::consts::PI * 1e-3, epsilon = 1e-8);
    }

    #[test]
    fn separating_normal_velocity_is_positive() {
        use crate::discrete_contact::ContactFrame;
        let sys = one_body();
        let mut s = sys.initial_state(&[(Vec3::zeros(), Vec3::zeros()), (Vec3::zeros(), Vec3::z() * 0.1)]);
        s.q[6] = 0.5;
        let c = ContactConstraint {
            body_a: 0,
            body_b: 1,
            point: Vec3::new(0.1, 0.0, 0.0),
            frame: ContactFrame::from_normal(Vec3::z()),
            phi0: 0.0,
            stiffness: 1.0,
            damping: 0.0,
            friction: 0.0,
            polygon: 0,
        };
        let j = sys.contact_jacobian(&[c], &s.q);
        let vc = j.multiply(&s.v);
        assert_relative_eq!(vc[2], 0.1, epsilon = 1e-15);
    }
}
