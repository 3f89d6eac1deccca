//! Geometry substrate: tetrahedral volume meshes, triangle surface meshes,
//! per-vertex scalar fields and bounding-volume hierarchies.

mod bvh;
pub mod io;
mod surface;
mod tet;

pub use bvh::{candidate_pairs, Aabb, Bvh, BvhNode, ElementBounds};
pub use surface::SurfaceMesh;
pub use tet::{field_gradient, interpolate_pressure, MassProperties, TetMesh, VertexField};

/// 3-vector used for points, directions and gradients.
pub type Vec3 = nalgebra::Vector3<f64>;

/// Rigid transform from a body frame to the world frame.
pub type RigidPose = nalgebra::Isometry3<f64>;

/// An affine scalar function `value + gradient · (x − origin)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineField {
    pub origin: Vec3,
    pub value: f64,
    pub gradient: Vec3,
}

impl AffineField {
    pub fn new(origin: Vec3, value: f64, gradient: Vec3) -> Self {
        Self {
            origin,
            value,
            gradient,
        }
    }

    #[inline]
    pub fn eval(&self, x: &Vec3) -> f64 {
        self.value + self.gradient.dot(&(x - self.origin))
    }

    /// Re-express the same function around another origin.
    pub fn rebased(&self, origin: Vec3) -> Self {
        Self {
            origin,
            value: self.eval(&origin),
            gradient: self.gradient,
        }
    }
}
