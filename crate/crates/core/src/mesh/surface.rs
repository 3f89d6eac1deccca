use super::{Aabb, Vec3};
use crate::error::{Error, Result};

/// Triangle surface mesh, counter-clockwise when seen from outside.
#[derive(Clone, Debug)]
pub struct SurfaceMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
}

impl SurfaceMesh {
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let count = vertices.len();
        if vertices.iter().any(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::NonFinite("surface vertices"));
        }
        for (i, tri) in triangles.iter().enumerate() {
            if let Some(&index) = tri.iter().find(|&&k| k >= count) {
                return Err(Error::IndexOutOfRange { index, count });
            }
            let [a, b, c] = tri.map(|k| vertices[k]);
            if (b - a).cross(&(c - a)).norm() == 0.0 {
                return Err(Error::DegenerateElement {
                    element: i,
                    volume: 0.0,
                });
            }
        }
        Ok(Self {
            vertices,
            triangles,
        })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_vertices(&self, tri: usize) -> [Vec3; 3] {
        self.triangles[tri].map(|k| self.vertices[k])
    }

    /// Outward unit normal of a triangle.
    pub fn normal(&self, tri: usize) -> Vec3 {
        let [a, b, c] = self.triangle_vertices(tri);
        (b - a).cross(&(c - a)).normalize()
    }

    pub fn bounding_box(&self) -> Option<Aabb> {
        Aabb::from_points(self.vertices.iter())
    }

    /// True when every edge is shared by exactly two triangles with opposite
    /// orientation.
    pub fn is_watertight(&self) -> bool {
        use std::collections::HashMap;
        let mut edges: HashMap<(usize, usize), i32> = HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                *edges.entry((a, b)).or_default() += 1;
            }
        }
        edges
            .iter()
            .all(|(&(a, b), &n)| n == 1 && edges.get(&(b, a)) == Some(&1))
    }

    /// Signed enclosed volume; positive for outward-oriented closed meshes.
    pub fn enclosed_volume(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                let [a, b, c] = t.map(|k| self.vertices[k]);
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }
}
