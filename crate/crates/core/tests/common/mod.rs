//! Independent oracles shared by the integration tests. Nothing here calls
//! into the geometry code under test.
#![allow(dead_code)]

pub mod dynamics;
pub mod tet_pair;

use hydroelastic::mesh::{TetMesh, Vec3, VertexField};
use hydroelastic::pressure_field::PressureMesh;
use nalgebra::{Matrix4, UnitQuaternion, Vector4};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Tet = [Vec3; 4];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn unit_vector(rng: &mut impl Rng) -> Vec3 {
    loop {
        let v = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

pub fn random_rotation(rng: &mut impl Rng) -> UnitQuaternion<f64> {
    let q = Vector4::new(
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
    );
    UnitQuaternion::from_quaternion(nalgebra::Quaternion::from_vector(q))
}

pub fn random_pose(rng: &mut impl Rng, reach: f64) -> nalgebra::Isometry3<f64> {
    let t = Vec3::new(
        rng.gen_range(-reach..reach),
        rng.gen_range(-reach..reach),
        rng.gen_range(-reach..reach),
    );
    nalgebra::Isometry3::from_parts(t.into(), random_rotation(rng))
}

pub fn signed_volume(t: &Tet) -> f64 {
    (t[1] - t[0]).dot(&(t[2] - t[0]).cross(&(t[3] - t[0]))) / 6.0
}

/// Random tet around `center` with edge scale `scale`, positively oriented
/// and not too flat (volume at least 2% of the regular tet of that scale).
pub fn random_tet(rng: &mut impl Rng, center: Vec3, scale: f64) -> Tet {
    loop {
        let mut t = [Vec3::zeros(); 4];
        for v in &mut t {
            *v = center + unit_vector(rng) * scale * rng.gen_range(0.3..1.0);
        }
        let vol = signed_volume(&t);
        if vol.abs() > 0.02 * scale.powi(3) / (6.0 * 2f64.sqrt()) {
            if vol < 0.0 {
                t.swap(0, 1);
            }
            return t;
        }
    }
}

/// Barycentric coordinates by Cramer's rule.
pub fn barycentric(t: &Tet, x: &Vec3) -> [f64; 4] {
    let v = signed_volume(t);
    let sub = |i: usize| {
        let mut s = *t;
        s[i] = *x;
        signed_volume(&s) / v
    };
    [sub(0), sub(1), sub(2), sub(3)]
}

pub fn inside(t: &Tet, x: &Vec3) -> bool {
    barycentric(t, x).iter().all(|&b| b >= 0.0)
}

/// Affine `(value at origin, gradient)` through four `(point, value)`
/// samples, from the 4×4 system `[x 1]·[g; c] = p`.
pub fn plane_fit(points: &Tet, values: &[f64; 4]) -> (f64, Vec3) {
    let mut a = Matrix4::zeros();
    let mut b = Vector4::zeros();
    for i in 0..4 {
        a[(i, 0)] = points[i].x;
        a[(i, 1)] = points[i].y;
        a[(i, 2)] = points[i].z;
        a[(i, 3)] = 1.0;
        b[i] = values[i];
    }
    let s = a.lu().solve(&b).expect("non-degenerate tet");
    (s[3], Vec3::new(s[0], s[1], s[2]))
}

pub fn eval_affine(f: &(f64, Vec3), x: &Vec3) -> f64 {
    f.0 + f.1.dot(x)
}

/// One-tet pressure mesh.
pub fn single_tet(t: &Tet, values: [f64; 4]) -> PressureMesh {
    let mesh = TetMesh::new(t.to_vec(), vec![[0, 1, 2, 3]]).unwrap();
    let field = VertexField::new(values.to_vec(), 4).unwrap();
    let modulus = values.iter().copied().fold(0.0, f64::max);
    PressureMesh::new(mesh, field, modulus).unwrap()
}

/// Orthonormal in-plane basis for unit normal `n`, built by Gram–Schmidt
/// from whichever of x̂, ŷ is less aligned with it.
pub fn plane_basis(n: &Vec3) -> (Vec3, Vec3) {
    let seed = if n.x.abs() < 0.7 { Vec3::x() } else { Vec3::y() };
    let e1 = (seed - n * n.dot(&seed)).normalize();
    (e1, n.cross(&e1))
}

/// Half-plane `a·u ≥ b` in 2-D plane coordinates.
#[derive(Clone, Copy, Debug)]
pub struct HalfPlane {
    pub a: [f64; 2],
    pub b: f64,
}

pub struct PlaneFrame {
    pub origin: Vec3,
    pub normal: Vec3,
    pub e1: Vec3,
    pub e2: Vec3,
}

impl PlaneFrame {
    pub fn new(origin: Vec3, normal: Vec3) -> Self {
        let normal = normal.normalize();
        let (e1, e2) = plane_basis(&normal);
        Self { origin, normal, e1, e2 }
    }

    pub fn to_2d(&self, x: &Vec3) -> [f64; 2] {
        let d = x - self.origin;
        [d.dot(&self.e1), d.dot(&self.e2)]
    }

    pub fn to_3d(&self, u: [f64; 2]) -> Vec3 {
        self.origin + self.e1 * u[0] + self.e2 * u[1]
    }

    /// Traces of the four face half-spaces of `t`.
    pub fn tet_half_planes(&self, t: &Tet) -> Vec<HalfPlane> {
        (0..4)
            .map(|i| {
                let f: Vec<Vec3> = (0..4).filter(|&j| j != i).map(|j| t[j]).collect();
                let mut m = (f[1] - f[0]).cross(&(f[2] - f[0]));
                if m.dot(&(t[i] - f[0])) < 0.0 {
                    m = -m;
                }
                self.half_plane(&m, &f[0])
            })
            .collect()
    }

    /// Traces of the three in-plane edge half-spaces of a triangle lying in
    /// this plane.
    pub fn triangle_half_planes(&self, tri: &[Vec3; 3]) -> Vec<HalfPlane> {
        (0..3)
            .map(|i| {
                let p = tri[i];
                let q = tri[(i + 1) % 3];
                let r = tri[(i + 2) % 3];
                let mut m = self.normal.cross(&(q - p));
                if m.dot(&(r - p)) < 0.0 {
                    m = -m;
                }
                self.half_plane(&m, &p)
            })
            .collect()
    }

    /// Trace of `{x : m·(x − p) ≥ 0}`.
    fn half_plane(&self, m: &Vec3, p: &Vec3) -> HalfPlane {
        HalfPlane {
            a: [m.dot(&self.e1), m.dot(&self.e2)],
            b: m.dot(&(p - self.origin)),
        }
    }
}

/// Exact area of a bounded intersection of half-planes by vertex
/// enumeration: every pairwise line intersection that satisfies all
/// constraints is a corner; corners are sorted by angle and shoelaced.
pub fn half_plane_area(hp: &[HalfPlane], scale: f64) -> (f64, Vec<[f64; 2]>) {
    let tol = 1e-10 * scale;
    let mut pts: Vec<[f64; 2]> = Vec::new();
    for i in 0..hp.len() {
        for j in i + 1..hp.len() {
            let (a, b) = (hp[i], hp[j]);
            let det = a.a[0] * b.a[1] - a.a[1] * b.a[0];
            let na = (a.a[0].hypot(a.a[1])) * (b.a[0].hypot(b.a[1]));
            if det.abs() < 1e-12 * na {
                continue;
            }
            let u = [(a.b * b.a[1] - b.b * a.a[1]) / det, (a.a[0] * b.b - b.a[0] * a.b) / det];
            let ok = hp.iter().all(|h| {
                let norm = h.a[0].hypot(h.a[1]);
                (h.a[0] * u[0] + h.a[1] * u[1] - h.b) / norm >= -tol
            });
            if ok && !pts.iter().any(|p| (p[0] - u[0]).hypot(p[1] - u[1]) < tol * 10.0) {
                pts.push(u);
            }
        }
    }
    if pts.len() < 3 {
        return (0.0, pts);
    }
    let c = [
        pts.iter().map(|p| p[0]).sum::<f64>() / pts.len() as f64,
        pts.iter().map(|p| p[1]).sum::<f64>() / pts.len() as f64,
    ];
    pts.sort_by(|p, q| {
        let ap = (p[1] - c[1]).atan2(p[0] - c[0]);
        let aq = (q[1] - c[1]).atan2(q[0] - c[0]);
        ap.total_cmp(&aq)
    });
    let mut area = 0.0;
    for i in 0..pts.len() {
        let p = pts[i];
        let q = pts[(i + 1) % pts.len()];
        area += p[0] * q[1] - q[0] * p[1];
    }
    (0.5 * area, pts)
}

/// Stratified Monte-Carlo area of `{u in box : inside(u)}` with one jittered
/// sample per cell of an `n × n` grid. Also returns a conservative standard
/// error: only cells cut by the boundary have variance, at most 1/4 each, and
/// a cell counts as cut when a neighbour's sample disagrees with its own.
pub fn stratified_area(
    rng: &mut impl Rng,
    lo: [f64; 2],
    hi: [f64; 2],
    n: usize,
    mut inside: impl FnMut([f64; 2]) -> bool,
) -> (f64, f64) {
    let (dx, dy) = ((hi[0] - lo[0]) / n as f64, (hi[1] - lo[1]) / n as f64);
    let mut grid = vec![false; n * n];
    for i in 0..n {
        for j in 0..n {
            let u = [
                lo[0] + (i as f64 + rng.gen::<f64>()) * dx,
                lo[1] + (j as f64 + rng.gen::<f64>()) * dy,
            ];
            grid[i * n + j] = inside(u);
        }
    }
    let hits = grid.iter().filter(|&&b| b).count();
    let mut mixed = 0usize;
    for i in 0..n {
        for j in 0..n {
            let here = grid[i * n + j];
            let differs = [(0i64, 1i64), (1, 0), (0, -1), (-1, 0)].iter().any(|(di, dj)| {
                let (a, b) = (i as i64 + di, j as i64 + dj);
                a >= 0 && b >= 0 && (a as usize) < n && (b as usize) < n && grid[a as usize * n + b as usize] != here
            });
            mixed += usize::from(differs);
        }
    }
    let cell = dx * dy;
    (hits as f64 * cell, (mixed as f64 * 0.25).sqrt() * cell)
}

/// Area and centroid of a planar polygon by an independent triangle fan.
pub fn fan_area_centroid(verts: &[Vec3], n: &Vec3) -> (f64, Vec3) {
    let mut area = 0.0;
    let mut moment = Vec3::zeros();
    for i in 1..verts.len() - 1 {
        let a = 0.5 * (verts[i] - verts[0]).cross(&(verts[i + 1] - verts[0])).dot(n);
        area += a;
        moment += a * (verts[0] + verts[i] + verts[i + 1]) / 3.0;
    }
    (area, moment / area)
}

/// Relative difference with a floor on the scale.
pub fn rel(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}
