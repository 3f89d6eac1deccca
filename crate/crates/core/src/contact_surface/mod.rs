//! Narrowphase: equal-pressure contact surfaces between posed geometries.
//!
//! For two compliant bodies each candidate tet pair contributes the
//! equilibrium plane of their linear fields clipped by both tets. For a rigid
//! body against a compliant one, each rigid triangle is clipped by the
//! compliant tets and the compliant field is sampled on it.

mod clip;

use std::io::Write;

use rayon::prelude::*;

pub use clip::{
    clip_half_space, clip_polygon_by_tet, equilibrium_plane, polygon_area_centroid,
    tet_half_spaces, Plane, PARALLEL_TOLERANCE,
};

use clip::Side;
use crate::discrete_contact::tangent_basis;
use crate::error::Result;
use crate::mesh::{candidate_pairs, Aabb, AffineField, Bvh, RigidPose, Vec3};
use crate::pressure_field::{PressureMesh, RigidGeometry};

/// Polygons smaller than this (m²) are dropped.
pub const MIN_POLYGON_AREA: f64 = 1e-14;

/// Candidate-pair count above which the narrowphase runs in parallel.
const PARALLEL_THRESHOLD: usize = 512;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tessellation {
    #[default]
    Polygonal,
    Triangulated,
}

/// One planar convex face of a contact surface, in world coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct ContactPolygon {
    /// Counter-clockwise about `normal`.
    pub vertices: Vec<Vec3>,
    pub area: f64,
    pub centroid: Vec3,
    /// Unit normal pointing from body A into body B.
    pub normal: Vec3,
    /// Equilibrium pressure at the centroid (Pa).
    pub centroid_pressure: f64,
    /// In-plane gradient of the (linear) pressure on the face (Pa/m).
    pub pressure_gradient: Vec3,
    /// −∇p_A·n̂ (Pa/m); infinite when A is rigid.
    pub grad_a: f64,
    /// ∇p_B·n̂ (Pa/m); infinite when B is rigid.
    pub grad_b: f64,
    /// Source element of A (tet, or triangle when A is rigid).
    pub element_a: usize,
    /// Source element of B (tet, or triangle when B is rigid).
    pub element_b: usize,
}

impl ContactPolygon {
    /// Pressure of the face's linear field at `x` (on the face plane).
    pub fn pressure_at(&self, x: &Vec3) -> f64 {
        self.centroid_pressure + self.pressure_gradient.dot(&(x - self.centroid))
    }

    /// Elastic force A·p_c·n̂ acting on body B.
    pub fn elastic_force(&self) -> Vec3 {
        self.normal * (self.area * self.centroid_pressure)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContactSurface {
    pub body_a: usize,
    pub body_b: usize,
    pub mode: Tessellation,
    pub polygons: Vec<ContactPolygon>,
}

impl ContactSurface {
    pub fn empty(body_a: usize, body_b: usize, mode: Tessellation) -> Self {
        Self {
            body_a,
            body_b,
            mode,
            polygons: Vec::new(),
        }
    }

    pub fn with_bodies(mut self, body_a: usize, body_b: usize) -> Self {
        self.body_a = body_a;
        self.body_b = body_b;
        self
    }

    pub fn face_count(&self) -> usize {
        self.polygons.len()
    }

    pub fn total_area(&self) -> f64 {
        self.polygons.iter().map(|p| p.area).sum()
    }

    /// Σ A·p_c·n̂ over all faces: the net elastic force on body B.
    pub fn net_force(&self) -> Vec3 {
        self.polygons.iter().map(|p| p.elastic_force()).sum()
    }

    /// Σ x_c × (A·p_c·n̂) about `point`: the elastic moment on body B.
    pub fn net_moment(&self, point: &Vec3) -> Vec3 {
        self.polygons
            .iter()
            .map(|p| (p.centroid - point).cross(&p.elastic_force()))
            .sum()
    }
}

/// Geometry prepared for contact queries (body frame + hierarchy).
#[derive(Clone, Debug)]
pub enum ContactGeometry {
    Compliant { mesh: PressureMesh, bvh: Bvh },
    Rigid { geometry: RigidGeometry, bvh: Bvh },
}

impl ContactGeometry {
    pub fn compliant(mesh: PressureMesh) -> Result<Self> {
        let bvh = Bvh::build(mesh.mesh())?;
        Ok(Self::Compliant { mesh, bvh })
    }

    pub fn rigid(geometry: RigidGeometry) -> Result<Self> {
        let bvh = Bvh::build(geometry.surface())?;
        Ok(Self::Rigid { geometry, bvh })
    }

    pub fn is_compliant(&self) -> bool {
        matches!(self, Self::Compliant { .. })
    }

    pub fn bvh(&self) -> &Bvh {
        match self {
            Self::Compliant { bvh, .. } | Self::Rigid { bvh, .. } => bvh,
        }
    }

    pub fn bounding_box(&self) -> Option<Aabb> {
        match self {
            Self::Compliant { mesh, .. } => mesh.mesh().bounding_box(),
            Self::Rigid { geometry, .. } => geometry.surface().bounding_box(),
        }
    }

    pub fn as_compliant(&self) -> Option<&PressureMesh> {
        match self {
            Self::Compliant { mesh, .. } => Some(mesh),
            Self::Rigid { .. } => None,
        }
    }
}

/// A compliant mesh with world-frame vertices and gradients.
pub struct PosedCompliant<'a> {
    pub mesh: &'a PressureMesh,
    pub pose: RigidPose,
    vertices: Vec<Vec3>,
}

impl<'a> PosedCompliant<'a> {
    pub fn new(mesh: &'a PressureMesh, pose: &RigidPose) -> Self {
        let vertices = mesh
            .mesh()
            .vertices()
            .iter()
            .map(|v| pose.transform_vector(v) + pose.translation.vector)
            .collect();
        Self {
            mesh,
            pose: *pose,
            vertices,
        }
    }

    pub fn tet(&self, t: usize) -> [Vec3; 4] {
        self.mesh.mesh().tets()[t].map(|k| self.vertices[k])
    }

    /// World-frame affine pressure of element `t`.
    pub fn field(&self, t: usize) -> AffineField {
        let v0 = self.mesh.mesh().tets()[t][0];
        AffineField::new(
            self.vertices[v0],
            self.mesh.field().values()[v0],
            self.pose.transform_vector(&self.mesh.gradient(t)),
        )
    }
}

/// A rigid surface with world-frame vertices.
pub struct PosedRigid<'a> {
    pub geometry: &'a RigidGeometry,
    vertices: Vec<Vec3>,
}

impl<'a> PosedRigid<'a> {
    pub fn new(geometry: &'a RigidGeometry, pose: &RigidPose) -> Self {
        let vertices = geometry
            .surface()
            .vertices()
            .iter()
            .map(|v| pose.transform_vector(v) + pose.translation.vector)
            .collect();
        Self { geometry, vertices }
    }

    pub fn triangle(&self, t: usize) -> [Vec3; 3] {
        self.geometry.surface().triangles()[t].map(|k| self.vertices[k])
    }
}

fn finish_polygon(
    mut vertices: Vec<Vec3>,
    plane: &Plane,
    field: &AffineField,
    grad_a: f64,
    grad_b: f64,
    element_a: usize,
    element_b: usize,
) -> Option<ContactPolygon> {
    if vertices.len() < 3 {
        return None;
    }
    for v in vertices.iter_mut() {
        *v = plane.project(v);
    }
    let (area, centroid) = polygon_area_centroid(&vertices, &plane.normal);
    if !(area >= MIN_POLYGON_AREA) {
        return None;
    }
    let n = plane.normal;
    let tangential = field.gradient - n * field.gradient.dot(&n);
    Some(ContactPolygon {
        vertices,
        area,
        centroid,
        normal: n,
        centroid_pressure: field.eval(&centroid).max(0.0),
        pressure_gradient: tangential,
        grad_a,
        grad_b,
        element_a,
        element_b,
    })
}

/// Contact polygon between compliant tet `tet_a` of `a` and `tet_b` of `b`.
pub fn tet_tet_contact_polygon(
    a: &PosedCompliant,
    tet_a: usize,
    b: &PosedCompliant,
    tet_b: usize,
) -> Option<ContactPolygon> {
    let va = a.tet(tet_a);
    let vb = b.tet(tet_b);
    // Rebase both fields near the pair to limit cancellation.
    let origin = va.iter().sum::<Vec3>() / 4.0;
    let la = a.field(tet_a).rebased(origin);
    let lb = b.field(tet_b).rebased(origin);
    let plane = equilibrium_plane(&la, &lb)?;

    let bounds = Aabb::from_points(va.iter().chain(vb.iter()))?;
    let center = plane.project(&bounds.center());
    let half = bounds.diagonal();
    let (u, w) = tangent_basis(&plane.normal);
    let mut poly = vec![
        center + (-u - w) * half,
        center + (u - w) * half,
        center + (u + w) * half,
        center + (-u + w) * half,
    ];
    let mut scratch = Vec::with_capacity(12);
    if !clip::clip_by_tet_on_plane(&mut poly, &mut scratch, &va, &plane, Side::A)
        || !clip::clip_by_tet_on_plane(&mut poly, &mut scratch, &vb, &plane, Side::B)
    {
        return None;
    }

    let grad_a = -la.gradient.dot(&plane.normal);
    let grad_b = lb.gradient.dot(&plane.normal);
    finish_polygon(poly, &plane, &la, grad_a, grad_b, tet_a, tet_b)
}

/// Contact polygon between rigid triangle `tri` and compliant tet `tet`.
/// `rigid_is_a` selects which side of the pair the rigid body plays; the
/// normal always points from A into B.
pub fn rigid_tri_contact_polygon(
    rigid: &PosedRigid,
    tri: usize,
    compliant: &PosedCompliant,
    tet: usize,
    rigid_is_a: bool,
) -> Option<ContactPolygon> {
    let corners = rigid.triangle(tri);
    let outward = (corners[1] - corners[0]).cross(&(corners[2] - corners[0]));
    let norm = outward.norm();
    if norm == 0.0 {
        return None;
    }
    let outward = outward / norm;
    let vt = compliant.tet(tet);
    let mut poly = if rigid_is_a {
        corners.to_vec()
    } else {
        vec![corners[0], corners[2], corners[1]]
    };
    let normal = if rigid_is_a { outward } else { -outward };
    let plane = Plane {
        point: corners[0],
        normal,
    };
    let mut scratch = Vec::with_capacity(8);
    let side = if rigid_is_a { Side::B } else { Side::A };
    if !clip::clip_by_tet_on_plane(&mut poly, &mut scratch, &vt, &plane, side) {
        return None;
    }
    let origin = vt.iter().sum::<Vec3>() / 4.0;
    let field = compliant.field(tet).rebased(origin);
    let (grad_a, grad_b, ea, eb) = if rigid_is_a {
        (f64::INFINITY, field.gradient.dot(&normal), tri, tet)
    } else {
        (-field.gradient.dot(&normal), f64::INFINITY, tet, tri)
    };
    finish_polygon(poly, &plane, &field, grad_a, grad_b, ea, eb)
}

fn run_pairs<T, F>(pairs: &[(usize, usize)], f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, usize) -> Option<T> + Sync,
{
    if pairs.len() >= PARALLEL_THRESHOLD {
        pairs
            .par_iter()
            .filter_map(|&(i, j)| f(i, j))
            .collect()
    } else {
        pairs.iter().filter_map(|&(i, j)| f(i, j)).collect()
    }
}

/// Candidate element pairs between two posed geometries (broadphase).
pub fn broadphase(
    geom_a: &ContactGeometry,
    pose_a: &RigidPose,
    geom_b: &ContactGeometry,
    pose_b: &RigidPose,
) -> Vec<(usize, usize)> {
    candidate_pairs(geom_a.bvh(), pose_a, geom_b.bvh(), pose_b)
}

/// Narrowphase over precomputed candidate pairs, polygonal tessellation.
pub fn narrowphase(
    geom_a: &ContactGeometry,
    pose_a: &RigidPose,
    geom_b: &ContactGeometry,
    pose_b: &RigidPose,
    pairs: &[(usize, usize)],
) -> Vec<ContactPolygon> {
    use ContactGeometry::{Compliant, Rigid};
    match (geom_a, geom_b) {
        (Compliant { mesh: ma, .. }, Compliant { mesh: mb, .. }) => {
            let a = PosedCompliant::new(ma, pose_a);
            let b = PosedCompliant::new(mb, pose_b);
            run_pairs(pairs, |i, j| tet_tet_contact_polygon(&a, i, &b, j))
        }
        (Rigid { geometry, .. }, Compliant { mesh, .. }) => {
            let r = PosedRigid::new(geometry, pose_a);
            let c = PosedCompliant::new(mesh, pose_b);
            run_pairs(pairs, |i, j| rigid_tri_contact_polygon(&r, i, &c, j, true))
        }
        (Compliant { mesh, .. }, Rigid { geometry, .. }) => {
            let c = PosedCompliant::new(mesh, pose_a);
            let r = PosedRigid::new(geometry, pose_b);
            run_pairs(pairs, |i, j| rigid_tri_contact_polygon(&r, j, &c, i, false))
        }
        // No model for rigid against rigid.
        (Rigid { .. }, Rigid { .. }) => Vec::new(),
    }
}

/// Full contact surface between two posed geometries.
pub fn compute_contact_surface(
    geom_a: &ContactGeometry,
    pose_a: &RigidPose,
    geom_b: &ContactGeometry,
    pose_b: &RigidPose,
    mode: Tessellation,
) -> Result<ContactSurface> {
    let pairs = broadphase(geom_a, pose_a, geom_b, pose_b);
    let surface = ContactSurface {
        body_a: 0,
        body_b: 1,
        mode: Tessellation::Polygonal,
        polygons: narrowphase(geom_a, pose_a, geom_b, pose_b, &pairs),
    };
    Ok(match mode {
        Tessellation::Polygonal => surface,
        Tessellation::Triangulated => triangulate(&surface),
    })
}

/// Replace every polygon by the fan of triangles about its centroid. Each
/// triangle carries the polygon's linear pressure sampled at its own centroid.
pub fn triangulate(surface: &ContactSurface) -> ContactSurface {
    if surface.mode == Tessellation::Triangulated {
        return surface.clone();
    }
    let mut polygons = Vec::with_capacity(surface.polygons.iter().map(|p| p.vertices.len()).sum());
    for poly in &surface.polygons {
        let n = poly.vertices.len();
        for i in 0..n {
            let tri = vec![poly.centroid, poly.vertices[i], poly.vertices[(i + 1) % n]];
            let (area, centroid) = polygon_area_centroid(&tri, &poly.normal);
            polygons.push(ContactPolygon {
                centroid_pressure: poly.pressure_at(&centroid).max(0.0),
                vertices: tri,
                area,
                centroid,
                ..poly.clone()
            });
        }
    }
    ContactSurface {
        body_a: surface.body_a,
        body_b: surface.body_b,
        mode: Tessellation::Triangulated,
        polygons,
    }
}

pub const POLYGON_SOUP_HEADER: &str = "# hydroelastic contact surface v1";

/// Write faces as an ASCII polygon soup: a header, `faces <n>`, then one line
/// per face: `k x1 y1 z1 ... xk yk zk p_c nx ny nz`.
pub fn write_polygon_soup<W: Write>(out: &mut W, surfaces: &[ContactSurface]) -> std::io::Result<()> {
    writeln!(out, "{POLYGON_SOUP_HEADER}")?;
    let total: usize = surfaces.iter().map(|s| s.face_count()).sum();
    writeln!(out, "faces {total}")?;
    for poly in surfaces.iter().flat_map(|s| &s.polygons) {
        write!(out, "{}", poly.vertices.len())?;
        for v in &poly.vertices {
            write!(out, " {} {} {}", v.x, v.y, v.z)?;
        }
        writeln!(
            out,
            " {} {} {} {}",
            poly.centroid_pressure, poly.normal.x, poly.normal.y, poly.normal.z
        )?;
    }
    Ok(())
}
