use nalgebra::Matrix3;

use super::{AffineField, Aabb, Vec3};
use crate::error::{Error, Result};

/// Relative degeneracy threshold: elements with volume below
/// `DEGENERACY_TOLERANCE * diag³` are rejected.
pub const DEGENERACY_TOLERANCE: f64 = 1e-14;

/// Distance (m) a query point may sit outside an element and still be
/// considered inside it.
pub const CONTAINMENT_TOLERANCE: f64 = 1e-10;

/// Tetrahedral volume mesh in a body frame.
///
/// Every element is stored with positive signed volume; elements given with
/// negative orientation are flipped on construction.
#[derive(Clone, Debug)]
pub struct TetMesh {
    vertices: Vec<Vec3>,
    tets: Vec<[usize; 4]>,
}

impl TetMesh {
    pub fn new(vertices: Vec<Vec3>, mut tets: Vec<[usize; 4]>) -> Result<Self> {
        let count = vertices.len();
        if vertices.iter().any(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::NonFinite("mesh vertices"));
        }
        let diag = Aabb::from_points(vertices.iter()).map_or(0.0, |b| b.diagonal());
        let min_volume = DEGENERACY_TOLERANCE * diag.powi(3);
        for (i, tet) in tets.iter_mut().enumerate() {
            if let Some(&index) = tet.iter().find(|&&k| k >= count) {
                return Err(Error::IndexOutOfRange { index, count });
            }
            let mut volume = signed_volume(&tet.map(|k| vertices[k]));
            if volume < 0.0 {
                tet.swap(2, 3);
                volume = -volume;
            }
            if volume <= min_volume {
                return Err(Error::DegenerateElement { element: i, volume });
            }
        }
        Ok(Self { vertices, tets })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn tets(&self) -> &[[usize; 4]] {
        &self.tets
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_tets(&self) -> usize {
        self.tets.len()
    }

    pub fn tet_vertices(&self, tet: usize) -> [Vec3; 4] {
        self.tets[tet].map(|k| self.vertices[k])
    }

    pub fn volume(&self, tet: usize) -> f64 {
        signed_volume(&self.tet_vertices(tet))
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.tets.len()).map(|t| self.volume(t)).sum()
    }

    pub fn bounding_box(&self) -> Option<Aabb> {
        Aabb::from_points(self.vertices.iter())
    }

    /// Flags vertices lying on a boundary face (a face owned by exactly one
    /// element).
    pub fn boundary_vertices(&self) -> Vec<bool> {
        use std::collections::HashMap;
        let mut faces: HashMap<[usize; 3], u32> = HashMap::new();
        for tet in &self.tets {
            for skip in 0..4 {
                let mut face = [0; 3];
                let mut n = 0;
                for (k, &v) in tet.iter().enumerate() {
                    if k != skip {
                        face[n] = v;
                        n += 1;
                    }
                }
                face.sort_unstable();
                *faces.entry(face).or_default() += 1;
            }
        }
        let mut flags = vec![false; self.vertices.len()];
        for (face, count) in faces {
            if count == 1 {
                for v in face {
                    flags[v] = true;
                }
            }
        }
        flags
    }

    /// Volume, centroid and inertia about the centroid for uniform density.
    pub fn mass_properties(&self, density: f64) -> MassProperties {
        let mut volume = 0.0;
        let mut first = Vec3::zeros();
        let mut second = Matrix3::zeros();
        for t in 0..self.tets.len() {
            let v = self.tet_vertices(t);
            let vol = signed_volume(&v);
            let sum: Vec3 = v.iter().sum();
            volume += vol;
            first += vol * sum / 4.0;
            let mut outer = sum * sum.transpose();
            for p in &v {
                outer += p * p.transpose();
            }
            second += outer * (vol / 20.0);
        }
        let centroid = if volume > 0.0 { first / volume } else { Vec3::zeros() };
        let covariance = (second - volume * centroid * centroid.transpose()) * density;
        let inertia = Matrix3::identity() * covariance.trace() - covariance;
        MassProperties {
            mass: density * volume,
            centroid,
            inertia,
        }
    }

    /// Affine interpolant of `field` restricted to one element, expressed
    /// around the element's first vertex.
    pub fn element_field(&self, field: &VertexField, tet: usize) -> Result<AffineField> {
        let gradient = field_gradient(self, field, tet)?;
        let v0 = self.tets[tet][0];
        Ok(AffineField::new(self.vertices[v0], field.values[v0], gradient))
    }
}

/// Mass, centroid and rotational inertia about the centroid.
#[derive(Clone, Copy, Debug)]
pub struct MassProperties {
    pub mass: f64,
    pub centroid: Vec3,
    pub inertia: Matrix3<f64>,
}

/// Scalar value per mesh vertex (Pa for pressure fields).
#[derive(Clone, Debug, PartialEq)]
pub struct VertexField {
    values: Vec<f64>,
}

impl VertexField {
    pub fn new(values: Vec<f64>, vertex_count: usize) -> Result<Self> {
        if values.len() != vertex_count {
            return Err(Error::InvalidField(format!(
                "{} values for {} vertices",
                values.len(),
                vertex_count
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidField(format!("value {v} is negative or not finite")));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

pub(crate) fn signed_volume(v: &[Vec3; 4]) -> f64 {
    (v[1] - v[0]).cross(&(v[2] - v[0])).dot(&(v[3] - v[0])) / 6.0
}

fn edge_matrix(v: &[Vec3; 4]) -> Matrix3<f64> {
    Matrix3::from_rows(&[
        (v[1] - v[0]).transpose(),
        (v[2] - v[0]).transpose(),
        (v[3] - v[0]).transpose(),
    ])
}

fn check_element(mesh: &TetMesh, field: &VertexField, tet: usize) -> Result<()> {
    if tet >= mesh.num_tets() {
        return Err(Error::IndexOutOfRange {
            index: tet,
            count: mesh.num_tets(),
        });
    }
    if field.len() != mesh.num_vertices() {
        return Err(Error::InvalidField(format!(
            "{} values for {} vertices",
            field.len(),
            mesh.num_vertices()
        )));
    }
    Ok(())
}

/// Barycentric-linear interpolation of `field` at `point` inside element `tet`.
pub fn interpolate_pressure(
    mesh: &TetMesh,
    field: &VertexField,
    tet: usize,
    point: &Vec3,
) -> Result<f64> {
    check_element(mesh, field, tet)?;
    let v = mesh.tet_vertices(tet);
    let volume = signed_volume(&v);
    // Sub-volumes opposite each vertex give the barycentric weights.
    let mut weights = [0.0; 4];
    for (i, w) in weights.iter_mut().enumerate() {
        let mut sub = v;
        sub[i] = *point;
        *w = signed_volume(&sub) / volume;
    }
    const FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];
    for (i, face) in FACES.iter().enumerate() {
        let area2 = (v[face[1]] - v[face[0]])
            .cross(&(v[face[2]] - v[face[0]]))
            .norm();
        // Height of vertex i above its opposite face.
        let height = 6.0 * volume / area2;
        if -weights[i] * height > CONTAINMENT_TOLERANCE {
            return Err(Error::PointNotInElement { element: tet });
        }
    }
    let values = mesh.tets()[tet].map(|k| field.values()[k]);
    Ok(weights.iter().zip(values).map(|(w, p)| w * p).sum())
}

/// Constant gradient of the linear interpolant of `field` over element `tet`.
pub fn field_gradient(mesh: &TetMesh, field: &VertexField, tet: usize) -> Result<Vec3> {
    check_element(mesh, field, tet)?;
    let v = mesh.tet_vertices(tet);
    let volume = signed_volume(&v);
    let diag = Aabb::from_points(v.iter()).map_or(0.0, |b| b.diagonal());
    if volume.abs() <= DEGENERACY_TOLERANCE * diag.powi(3) {
        return Err(Error::DegenerateElement {
            element: tet,
            volume,
        });
    }
    let idx = mesh.tets()[tet];
    let p = idx.map(|k| field.values()[k]);
    let rhs = Vec3::new(p[1] - p[0], p[2] - p[0], p[3] - p[0]);
    edge_matrix(&v)
        .lu()
        .solve(&rhs)
        .ok_or(Error::DegenerateElement {
            element: tet,
            volume,
        })
}
