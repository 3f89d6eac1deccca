//! Pressure-field meshes for primitive shapes.
//!
//! Fields are the distance to the boundary scaled so the medial axis carries
//! the hydroelastic modulus and the boundary carries zero, sampled at mesh
//! vertices and linearly interpolated in between.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::mesh::{field_gradient, SurfaceMesh, TetMesh, Vec3, VertexField};

/// Tetrahedral mesh with a per-vertex pressure field (Pa), in the body frame.
#[derive(Clone, Debug)]
pub struct PressureMesh {
    mesh: TetMesh,
    field: VertexField,
    modulus: f64,
    gradients: Vec<Vec3>,
}

impl PressureMesh {
    pub fn new(mesh: TetMesh, field: VertexField, modulus: f64) -> Result<Self> {
        if !(modulus >= 0.0 && modulus.is_finite()) {
            return Err(Error::InvalidField(format!("modulus {modulus} must be >= 0")));
        }
        if field.len() != mesh.num_vertices() {
            return Err(Error::InvalidField(format!(
                "{} values for {} vertices",
                field.len(),
                mesh.num_vertices()
            )));
        }
        let gradients = (0..mesh.num_tets())
            .map(|t| field_gradient(&mesh, &field, t))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            mesh,
            field,
            modulus,
            gradients,
        })
    }

    /// Wrap a mesh loaded from file; the modulus is taken as the field maximum.
    pub fn from_field(mesh: TetMesh, field: VertexField) -> Result<Self> {
        let modulus = field.max();
        Self::new(mesh, field, modulus)
    }

    pub fn mesh(&self) -> &TetMesh {
        &self.mesh
    }

    pub fn field(&self) -> &VertexField {
        &self.field
    }

    pub fn modulus(&self) -> f64 {
        self.modulus
    }

    /// Body-frame pressure gradient of one element.
    pub fn gradient(&self, tet: usize) -> Vec3 {
        self.gradients[tet]
    }
}

/// A rigid body described only by its boundary triangles.
#[derive(Clone, Debug)]
pub struct RigidGeometry {
    surface: SurfaceMesh,
}

impl RigidGeometry {
    pub fn new(surface: SurfaceMesh) -> Self {
        Self { surface }
    }

    pub fn surface(&self) -> &SurfaceMesh {
        &self.surface
    }

    /// Closed box centered at the origin.
    pub fn make_box(half_sizes: Vec3) -> Result<Self> {
        if half_sizes.iter().any(|h| !(*h > 0.0)) {
            return Err(Error::InvalidDimensions(format!(
                "box half sizes must be positive, got {half_sizes:?}"
            )));
        }
        let h = half_sizes;
        let vertices = (0..8)
            .map(|i| {
                Vec3::new(
                    if i & 1 == 0 { -h.x } else { h.x },
                    if i & 2 == 0 { -h.y } else { h.y },
                    if i & 4 == 0 { -h.z } else { h.z },
                )
            })
            .collect();
        let triangles = vec![
            [0, 2, 3], [0, 3, 1], // -z
            [4, 5, 7], [4, 7, 6], // +z
            [0, 1, 5], [0, 5, 4], // -y
            [2, 6, 7], [2, 7, 3], // +y
            [0, 4, 6], [0, 6, 2], // -x
            [1, 3, 7], [1, 7, 5], // +x
        ];
        Ok(Self::new(SurfaceMesh::new(vertices, triangles)?))
    }

    /// Square in the z = 0 plane facing +z, standing in for a rigid half-space.
    pub fn make_plane(half_extent: f64) -> Result<Self> {
        if !(half_extent > 0.0) {
            return Err(Error::InvalidDimensions(format!(
                "plane half extent must be positive, got {half_extent}"
            )));
        }
        let e = half_extent;
        let vertices = vec![
            Vec3::new(-e, -e, 0.0),
            Vec3::new(e, -e, 0.0),
            Vec3::new(e, e, 0.0),
            Vec3::new(-e, e, 0.0),
        ];
        Ok(Self::new(SurfaceMesh::new(vertices, vec![[0, 1, 2], [0, 2, 3]])?))
    }
}

fn check_positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidDimensions(format!("{name} must be positive, got {value}")))
    }
}

fn check_modulus(modulus: f64) -> Result<()> {
    if modulus >= 0.0 && modulus.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidDimensions(format!("modulus must be >= 0, got {modulus}")))
    }
}

/// Kuhn split of a hexahedral grid into six tets per cell. Neighbouring cells
/// share face diagonals, so the result is conforming.
fn grid_tets(nx: usize, ny: usize, nz: usize) -> Vec<[usize; 4]> {
    let id = |i: usize, j: usize, k: usize| i + (nx + 1) * (j + (ny + 1) * k);
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut tets = Vec::with_capacity(6 * nx * ny * nz);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let corner = |bits: usize| id(i + (bits & 1), j + ((bits >> 1) & 1), k + ((bits >> 2) & 1));
                for p in PERMS {
                    let a = 1 << p[0];
                    let b = a | (1 << p[1]);
                    tets.push([corner(0), corner(a), corner(b), corner(7)]);
                }
            }
        }
    }
    tets
}

/// Grid coordinate `i` of `n` cells over `[-h, h]`, exact at both ends and
/// at the midpoint.
fn grid_coord(h: f64, i: usize, n: usize) -> f64 {
    h * (((2 * i) as f64 - n as f64) / n as f64)
}

/// Compliant box centered at the origin.
pub fn make_box(half_sizes: Vec3, modulus: f64, resolution: f64) -> Result<PressureMesh> {
    for (axis, h) in ["x", "y", "z"].iter().zip(half_sizes.iter()) {
        check_positive(&format!("half size {axis}"), *h)?;
    }
    check_modulus(modulus)?;
    let depth = half_sizes.min();
    if !(resolution > 0.0 && resolution <= depth) {
        return Err(Error::InvalidDimensions(format!(
            "resolution {resolution} must be in (0, {depth}]"
        )));
    }
    // Even cell counts put grid planes through the center.
    let n = half_sizes.map(|h| 2 * (h / resolution).ceil() as usize);
    let mut vertices = Vec::new();
    let mut values = Vec::new();
    for k in 0..=n.z {
        for j in 0..=n.y {
            for i in 0..=n.x {
                let x = Vec3::new(
                    grid_coord(half_sizes.x, i, n.x),
                    grid_coord(half_sizes.y, j, n.y),
                    grid_coord(half_sizes.z, k, n.z),
                );
                let dist = (0..3)
                    .map(|a| half_sizes[a] - x[a].abs())
                    .fold(f64::INFINITY, f64::min)
                    .max(0.0);
                vertices.push(x);
                values.push(modulus * (dist / depth));
            }
        }
    }
    let mesh = TetMesh::new(vertices, grid_tets(n.x, n.y, n.z))?;
    let field = VertexField::new(values, mesh.num_vertices())?;
    PressureMesh::new(mesh, field, modulus)
}

/// Finite slab standing in for a compliant half-space: top face at z = 0,
/// bottom at z = −thickness, square of side `extent` centered on the z axis.
/// Pressure grows linearly with depth and reaches `modulus` at the bottom.
pub fn make_half_space_slab(
    thickness: f64,
    extent: f64,
    modulus: f64,
    resolution: f64,
) -> Result<PressureMesh> {
    check_positive("thickness", thickness)?;
    check_positive("extent", extent)?;
    check_modulus(modulus)?;
    if !(resolution > 0.0 && resolution <= extent) {
        return Err(Error::InvalidDimensions(format!(
            "resolution {resolution} must be in (0, {extent}]"
        )));
    }
    let nxy = (extent / resolution).ceil() as usize;
    let nz = ((thickness / resolution).ceil() as usize).max(1);
    let half = extent / 2.0;
    let mut vertices = Vec::new();
    let mut values = Vec::new();
    for k in 0..=nz {
        let frac = k as f64 / nz as f64;
        for j in 0..=nxy {
            for i in 0..=nxy {
                vertices.push(Vec3::new(
                    grid_coord(half, i, nxy),
                    grid_coord(half, j, nxy),
                    -thickness * (1.0 - frac),
                ));
                values.push(modulus * (1.0 - frac));
            }
        }
    }
    let mesh = TetMesh::new(vertices, grid_tets(nxy, nxy, nz))?;
    let field = VertexField::new(values, mesh.num_vertices())?;
    PressureMesh::new(mesh, field, modulus)
}

/// Split a triangular prism into three tets using the minimum-index diagonal
/// rule, so prisms sharing a quad face split it the same way.
/// `v[0..3]` and `v[3..6]` are corresponding corners of the two triangles.
fn split_prism(v: [usize; 6]) -> [[usize; 4]; 3] {
    const RELABEL: [[usize; 6]; 6] = [
        [0, 1, 2, 3, 4, 5],
        [1, 2, 0, 4, 5, 3],
        [2, 0, 1, 5, 3, 4],
        [3, 5, 4, 0, 2, 1],
        [4, 3, 5, 1, 0, 2],
        [5, 4, 3, 2, 1, 0],
    ];
    let start = (0..6).min_by_key(|&i| v[i]).expect("six corners");
    let p = RELABEL[start].map(|k| v[k]);
    if p[1].min(p[5]) < p[2].min(p[4]) {
        [[p[0], p[1], p[2], p[5]], [p[0], p[1], p[5], p[4]], [p[0], p[4], p[5], p[3]]]
    } else {
        [[p[0], p[1], p[2], p[4]], [p[0], p[4], p[2], p[5]], [p[0], p[4], p[5], p[3]]]
    }
}

/// Triangulate the annulus between two closed vertex rings given as global
/// indices with their polar angles, both counter-clockwise.
fn zip_rings(
    outer: &[usize],
    outer_angles: &[f64],
    inner: &[usize],
    inner_angles: &[f64],
    out: &mut Vec<[usize; 3]>,
) {
    let (no, ni) = (outer.len(), inner.len());
    let base = outer_angles[0];
    let rel = |a: f64| (a - base).rem_euclid(2.0 * PI);
    // Inner vertex just behind the first outer vertex.
    let start = (0..ni)
        .max_by(|&a, &b| rel(inner_angles[a]).total_cmp(&rel(inner_angles[b])))
        .expect("non-empty ring");
    let alpha = |j: usize| if j == no { 2.0 * PI } else { rel(outer_angles[j]) };
    let beta = |i: usize| {
        let r = rel(inner_angles[(start + i) % ni]);
        if i == 0 {
            r - 2.0 * PI
        } else {
            r
        }
    };
    let o = |j: usize| outer[j % no];
    let n = |i: usize| inner[(start + i) % ni];
    let (mut i, mut j) = (0, 0);
    while i < ni || j < no {
        if j < no && (i == ni || alpha(j + 1) <= beta(i + 1)) {
            out.push([o(j), o(j + 1), n(i)]);
            j += 1;
        } else {
            out.push([o(j), n(i + 1), n(i)]);
            i += 1;
        }
    }
}

/// Compliant disk-like cylinder centered at the origin with its axis along z.
///
/// The rim is an `N`-gon with vertices on the circle of `radius`, `N` chosen
/// from `resolution`. The mesh conforms to the medial surface of that prism
/// (the mid-plane disk plus the 45° bands toward the rim), so within every
/// element the distance to the boundary is exactly linear.
pub fn make_cylinder(radius: f64, height: f64, modulus: f64, resolution: f64) -> Result<PressureMesh> {
    check_positive("radius", radius)?;
    check_positive("height", height)?;
    check_modulus(modulus)?;
    if !(resolution > 0.0 && resolution <= radius) {
        return Err(Error::InvalidDimensions(format!(
            "resolution {resolution} must be in (0, {radius}]"
        )));
    }
    let n_rim = ((2.0 * PI * radius / resolution).round() as usize).max(6);
    let cos_half = (PI / n_rim as f64).cos();
    let apothem = radius * cos_half;
    let half_h = height / 2.0;
    if apothem <= half_h {
        return Err(Error::InvalidDimensions(format!(
            "cylinder must be wider than tall (radius {radius}, height {height})"
        )));
    }
    // Circumradius of the inner polygon where the rim band starts.
    let inner_radius = (apothem - half_h) / cos_half;
    let n_rings = ((inner_radius / resolution).ceil() as usize).max(1);

    // Planar layout: center, then rings 1..=n_rings; the last ring lines up
    // angularly with the rim polygon.
    let mut plane = vec![(0.0f64, 0.0f64)];
    let mut rings: Vec<(Vec<usize>, Vec<f64>)> = Vec::new();
    for k in 1..=n_rings {
        let count = if k == n_rings {
            n_rim
        } else {
            ((n_rim as f64 * k as f64 / n_rings as f64).round() as usize).max(3)
        };
        let offset = if k == n_rings { 0.0 } else { 0.5 };
        let r = inner_radius * k as f64 / n_rings as f64;
        let mut ids = Vec::with_capacity(count);
        let mut angles = Vec::with_capacity(count);
        for j in 0..count {
            let a = 2.0 * PI * (j as f64 + offset) / count as f64;
            ids.push(plane.len());
            angles.push(a);
            plane.push((a, r));
        }
        rings.push((ids, angles));
    }
    let mut triangles = Vec::new();
    let first = &rings[0].0;
    for j in 0..first.len() {
        triangles.push([0, first[j], first[(j + 1) % first.len()]]);
    }
    for k in 1..rings.len() {
        let (inner, outer) = (&rings[k - 1], &rings[k]);
        zip_rings(&outer.0, &outer.1, &inner.0, &inner.1, &mut triangles);
    }

    let n_plane = plane.len();
    let bot = |v: usize| 3 * v;
    let mid = |v: usize| 3 * v + 1;
    let top = |v: usize| 3 * v + 2;
    let rim_b = |j: usize| 3 * n_plane + 2 * j;
    let rim_t = |j: usize| 3 * n_plane + 2 * j + 1;

    let mut vertices = Vec::with_capacity(3 * n_plane + 2 * n_rim);
    let mut values = Vec::with_capacity(vertices.capacity());
    for &(a, r) in &plane {
        let (x, y) = (r * a.cos(), r * a.sin());
        vertices.extend([Vec3::new(x, y, -half_h), Vec3::new(x, y, 0.0), Vec3::new(x, y, half_h)]);
        values.extend([0.0, modulus, 0.0]);
    }
    for j in 0..n_rim {
        let a = 2.0 * PI * j as f64 / n_rim as f64;
        let (x, y) = (radius * a.cos(), radius * a.sin());
        vertices.extend([Vec3::new(x, y, -half_h), Vec3::new(x, y, half_h)]);
        values.extend([0.0, 0.0]);
    }

    let mut tets = Vec::new();
    for &[a, b, c] in &triangles {
        tets.extend(split_prism([bot(a), bot(b), bot(c), mid(a), mid(b), mid(c)]));
        tets.extend(split_prism([mid(a), mid(b), mid(c), top(a), top(b), top(c)]));
    }
    let last = &rings[n_rings - 1].0;
    for j in 0..n_rim {
        let j1 = (j + 1) % n_rim;
        let (o, o1) = (last[j], last[j1]);
        tets.extend(split_prism([bot(o), rim_b(j), mid(o), bot(o1), rim_b(j1), mid(o1)]));
        tets.extend(split_prism([rim_b(j), rim_t(j), mid(o), rim_b(j1), rim_t(j1), mid(o1)]));
        tets.extend(split_prism([top(o), rim_t(j), mid(o), top(o1), rim_t(j1), mid(o1)]));
    }

    let mesh = TetMesh::new(vertices, tets)?;
    let field = VertexField::new(values, mesh.num_vertices())?;
    PressureMesh::new(mesh, field, modulus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn prism_split_covers_prism_volume() {
        let pos = [
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::new(1.0, 0.0, 1.0),
            Vec3::new(0.0, 1.0, 1.0),
        ];
        // Every labelling must give three tets filling the prism.
        for perm in [[0, 1, 2, 3, 4, 5], [5, 4, 3, 2, 1, 0], [2, 5, 0, 4, 1, 3], [3, 0, 5, 1, 2, 4]] {
            let mut ids = [0; 6];
            let mut verts = vec![Vec3::zeros(); 6];
            for (slot, &label) in perm.iter().enumerate() {
                ids[slot] = label;
                verts[label] = pos[slot];
            }
            let mesh = TetMesh::new(verts, split_prism(ids).to_vec()).unwrap();
            assert_relative_eq!(mesh.total_volume(), 0.5, epsilon = 1e-14);
        }
    }

    #[test]
    fn unit_cube_center_and_corners() {
        let pm = make_box(Vec3::repeat(0.5), 1e5, 0.25).unwrap();
        let mesh = pm.mesh();
        for (v, p) in mesh.vertices().iter().zip(pm.field().values()) {
            if v.norm() == 0.0 {
                assert_eq!(*p, 1e5);
            }
            if v.iter().all(|c| c.abs() == 0.5) {
                assert_eq!(*p, 0.0);
            }
        }
        assert_relative_eq!(mesh.total_volume(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn box_rejects_bad_dimensions() {
        assert!(make_box(Vec3::new(1.0, -1.0, 1.0), 1.0, 0.1).is_err());
        assert!(make_box(Vec3::repeat(1.0), 1.0, 2.0).is_err());
        assert!(make_box(Vec3::repeat(1.0), -1.0, 0.5).is_err());
    }

    #[test]
    fn slab_pressure_is_linear_in_depth() {
        let pm = make_half_space_slab(0.1, 1.0, 1e7, 0.05).unwrap();
        for (v, p) in pm.mesh().vertices().iter().zip(pm.field().values()) {
            assert_relative_eq!(*p, -v.z * 1e7 / 0.1, max_relative = 1e-12, epsilon = 1e-6);
        }
        for t in 0..pm.mesh().num_tets() {
            assert_relative_eq!(pm.gradient(t), Vec3::new(0.0, 0.0, -1e8), max_relative = 1e-9);
        }
    }

    #[test]
    fn cylinder_volume_matches_prism() {
        let r = 1.213e-2;
        let h = 1.75e-3;
        let pm = make_cylinder(r, h, 1e9, r / 8.0).unwrap();
        let n = (2.0 * PI * 8.0).round();
        let polygon_area = 0.5 * n * r * r * (2.0 * PI / n).sin();
        assert_relative_eq!(pm.mesh().total_volume(), polygon_area * h, max_relative = 1e-10);
    }

    #[test]
    fn tall_cylinder_rejected() {
        assert!(make_cylinder(0.01, 0.05, 1e6, 0.005).is_err());
        assert!(make_cylinder(0.01, 0.001, 1e6, 0.02).is_err());
    }
}
