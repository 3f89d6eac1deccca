//! Surrogate point contacts built from contact polygons.
//!
//! Each polygon becomes a linear compliant spring along its normal whose
//! stiffness and rest offset reproduce the polygon's elastic force and its
//! first-order pressure rate.

use std::io::Write;

use crate::contact_surface::ContactPolygon;
use crate::mesh::Vec3;

/// Combined slope of the two pressure fields along the contact normal.
///
/// Returns `None` unless both slopes are strictly positive. An infinite
/// slope stands for a rigid side and yields the other slope.
pub fn effective_gradient(g_a: f64, g_b: f64) -> Option<f64> {
    if !(g_a > 0.0 && g_b > 0.0) {
        return None;
    }
    match (g_a.is_infinite(), g_b.is_infinite()) {
        (true, true) => None,
        (true, false) => Some(g_b),
        (false, true) => Some(g_a),
        (false, false) => {
            // s/(1 + s/h) with s ≤ h: the divisor lies in [1, 2] after
            // rounding, so s/2 ≤ g ≤ s holds exactly and no product overflows.
            let (soft, hard) = if g_a <= g_b { (g_a, g_b) } else { (g_b, g_a) };
            Some(soft / (1.0 + soft / hard))
        }
    }
}

/// Symmetric combination of per-body friction coefficients.
pub fn combine_friction(mu_a: f64, mu_b: f64) -> f64 {
    if mu_a + mu_b <= 0.0 {
        0.0
    } else {
        2.0 * mu_a * mu_b / (mu_a + mu_b)
    }
}

/// Orthonormal tangents `(t1, t2)` with `t1 × t2 = n` for unit `n`.
/// Built from the world axis least aligned with `n`.
pub fn tangent_basis(n: &Vec3) -> (Vec3, Vec3) {
    let axis = n.abs().imin();
    let mut e = Vec3::zeros();
    e[axis] = 1.0;
    let t1 = (e - n * n.dot(&e)).normalize();
    let t2 = n.cross(&t1);
    (t1, t2)
}

/// Local contact frame at a polygon centroid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContactFrame {
    pub t1: Vec3,
    pub t2: Vec3,
    /// From body A into body B.
    pub normal: Vec3,
}

impl ContactFrame {
    pub fn from_normal(normal: Vec3) -> Self {
        let (t1, t2) = tangent_basis(&normal);
        Self { t1, t2, normal }
    }

    /// Rows in `t1, t2, n` order.
    pub fn axes(&self) -> [Vec3; 3] {
        [self.t1, self.t2, self.normal]
    }

    pub fn to_local(&self, w: &Vec3) -> Vec3 {
        Vec3::new(self.t1.dot(w), self.t2.dot(w), self.normal.dot(w))
    }

    pub fn to_world(&self, c: &Vec3) -> Vec3 {
        self.t1 * c.x + self.t2 * c.y + self.normal * c.z
    }
}

/// Linear damping proportional to stiffness: `d = tau * k`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DissipationModel {
    /// Relaxation time (s), `>= 0`.
    pub tau: f64,
}

impl DissipationModel {
    pub fn new(tau: f64) -> Self {
        assert!(tau >= 0.0, "relaxation time must be non-negative");
        Self { tau }
    }

    pub fn damping(&self, stiffness: f64) -> f64 {
        self.tau * stiffness
    }
}

impl Default for DissipationModel {
    fn default() -> Self {
        Self { tau: 0.01 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContactConstraint {
    pub body_a: usize,
    pub body_b: usize,
    pub point: Vec3,
    pub frame: ContactFrame,
    /// Surrogate signed distance (m), `<= 0`.
    pub phi0: f64,
    /// N/m, `> 0`.
    pub stiffness: f64,
    /// N·s/m, `>= 0`.
    pub damping: f64,
    pub friction: f64,
    /// Index of the source polygon within its surface.
    pub polygon: usize,
}

impl ContactConstraint {
    /// Normal force predicted at normal velocity `v_n` over a step `dt`.
    pub fn normal_force(&self, v_n: f64, dt: f64) -> f64 {
        elastic_force(self.phi0 + dt * v_n, v_n, self.stiffness, self.damping)
    }
}

/// Constraint for one polygon, or `None` when its gradients are not both
/// positive. Body ids are left at 0/1 and set by the caller.
pub fn polygon_to_constraint(
    poly: &ContactPolygon,
    friction: f64,
    dissipation: &DissipationModel,
) -> Option<ContactConstraint> {
    let g = effective_gradient(poly.grad_a, poly.grad_b)?;
    let stiffness = g * poly.area;
    if !(stiffness > 0.0) || !stiffness.is_finite() {
        return None;
    }
    Some(ContactConstraint {
        body_a: 0,
        body_b: 1,
        point: poly.centroid,
        frame: ContactFrame::from_normal(poly.normal),
        phi0: -poly.centroid_pressure / g,
        stiffness,
        damping: dissipation.damping(stiffness),
        friction,
        polygon: 0,
    })
}

/// Compliant normal law `(−kφ − d·v_n)_+`.
pub fn elastic_force(phi: f64, v_n: f64, k: f64, d: f64) -> f64 {
    (-k * phi - d * v_n).max(0.0)
}

/// Time rate of the centroid pressure at normal velocity `v_n`.
pub fn pressure_rate(g: f64, v_n: f64) -> f64 {
    -g * v_n
}

pub const CONSTRAINT_CSV_HEADER: &str = "step,t,body_a,body_b,phi0,k,d,mu,xc_x,xc_y,xc_z,n_x,n_y,n_z";

/// One CSV row per constraint, columns as in [`CONSTRAINT_CSV_HEADER`].
pub fn write_constraints_csv<W: Write>(
    out: &mut W,
    step: usize,
    time: f64,
    constraints: &[ContactConstraint],
) -> std::io::Result<()> {
    for c in constraints {
        writeln!(
            out,
            "{step},{time},{},{},{},{},{},{},{},{},{},{},{},{}",
            c.body_a,
            c.body_b,
            c.phi0,
            c.stiffness,
            c.damping,
            c.friction,
            c.point.x,
            c.point.y,
            c.point.z,
            c.frame.normal.x,
            c.frame.normal.y,
            c.frame.normal.z
        )?;
    }
    Ok(())
}
