//! Randomized tet–tet contact trial checked against the oracles in `mod.rs`.

use hydroelastic::contact_surface::{tet_tet_contact_polygon, PosedCompliant, MIN_POLYGON_AREA};
use hydroelastic::mesh::{RigidPose, Vec3};
use rand::Rng;

use super::*;

/// Outcome of one trial that produced a polygon.
#[derive(Clone, Debug, Default)]
pub struct TrialReport {
    pub vertex_count: usize,
    /// |p_A − p_B| at the centroid over max(p_c, 1 Pa).
    pub pressure_error: f64,
    /// Relative difference to the exact vertex-enumeration area.
    pub exact_area_error: f64,
    /// Relative difference to the Monte-Carlo area and the MC relative
    /// standard error, when the MC estimate was precise enough to compare.
    pub mc: Option<(f64, f64)>,
    /// Largest relative change of A, p_c, g_A, g_B, centroid and normal
    /// under a random rigid motion of both bodies.
    pub frame_error: f64,
}

pub struct TetPair {
    pub a: Tet,
    pub b: Tet,
    pub va: [f64; 4],
    pub vb: [f64; 4],
}

/// Two overlapping tets with affine fields that agree at a point inside the
/// overlap region, so the equilibrium plane usually cuts both.
pub fn random_tet_pair(rng: &mut impl Rng) -> TetPair {
    loop {
        let a = random_tet(rng, Vec3::zeros(), 1.0);
        let offset = unit_vector(rng) * rng.gen_range(0.0..0.6);
        let scale = rng.gen_range(0.5..1.5);
        let b = random_tet(rng, offset, scale);
        // The fields agree at `meet`, chosen inside both tets when they overlap.
        let meet = (0..64).map(|_| random_point_in(rng, &a)).find(|x| inside(&b, x));
        if let Some(meet) = meet {
            return tet_pair_meeting_at(rng, a, b, meet);
        }
    }
}

fn random_point_in(rng: &mut impl Rng, t: &Tet) -> Vec3 {
    let w: [f64; 4] = std::array::from_fn(|_| -rng.gen::<f64>().max(1e-300).ln());
    let sum: f64 = w.iter().sum();
    (0..4).map(|i| t[i] * (w[i] / sum)).sum()
}

fn tet_pair_meeting_at(rng: &mut impl Rng, a: Tet, b: Tet, meet: Vec3) -> TetPair {
    let p0 = 1e4;
    let ga = unit_vector(rng) * rng.gen_range(500.0..2000.0);
    let gb = unit_vector(rng) * rng.gen_range(500.0..2000.0);
    let vals = |t: &Tet, g: &Vec3| {
        let mut v = [0.0; 4];
        for i in 0..4 {
            v[i] = (p0 + g.dot(&(t[i] - meet))).max(0.0);
        }
        v
    };
    TetPair {
        va: vals(&a, &ga),
        vb: vals(&b, &gb),
        a,
        b,
    }
}

/// Run every geometric check on one pair. `Ok(None)` means no polygon and
/// the oracle agrees there is no contact; `Err` describes a violated check.
pub fn check_tet_pair(pair: &TetPair, rng: &mut impl Rng, mc_grid: usize) -> Result<Option<TrialReport>, String> {
    let ma = single_tet(&pair.a, pair.va);
    let mb = single_tet(&pair.b, pair.vb);
    let id = RigidPose::identity();
    let poly = tet_tet_contact_polygon(&PosedCompliant::new(&ma, &id), 0, &PosedCompliant::new(&mb, &id), 0);

    let fa = plane_fit(&pair.a, &pair.va);
    let fb = plane_fit(&pair.b, &pair.vb);
    let d = fb.1 - fa.1;
    if d.norm() < 1e-9 * fa.1.norm().max(fb.1.norm()) {
        return match poly {
            None => Ok(None),
            Some(_) => Err("polygon for parallel fields".into()),
        };
    }
    let n_o = d.normalize();
    let frame = PlaneFrame::new(d * (fa.0 - fb.0) / d.norm_squared(), n_o);
    let mut hp = frame.tet_half_planes(&pair.a);
    hp.extend(frame.tet_half_planes(&pair.b));
    let (exact, corners) = half_plane_area(&hp, 1.0);

    let Some(poly) = poly else {
        return if exact < 1e-9 {
            Ok(None)
        } else {
            Err(format!("missed polygon of area {exact:e}"))
        };
    };
    let n = poly.vertices.len();
    if !(3..=8).contains(&n) {
        return Err(format!("{n} vertices"));
    }
    if (poly.normal.norm() - 1.0).abs() > 1e-12 || poly.normal.dot(&n_o) < 1.0 - 1e-12 {
        return Err(format!("normal {:?} vs oracle {:?}", poly.normal, n_o));
    }
    let diameter = poly
        .vertices
        .iter()
        .flat_map(|p| poly.vertices.iter().map(move |q| (p - q).norm()))
        .fold(0.0, f64::max);
    for v in &poly.vertices {
        if (v - poly.vertices[0]).dot(&poly.normal).abs() > 1e-9 * diameter.max(1e-12) {
            return Err("vertices not coplanar".into());
        }
    }
    for i in 0..n {
        let (p, q, r) = (poly.vertices[i], poly.vertices[(i + 1) % n], poly.vertices[(i + 2) % n]);
        if (q - p).cross(&(r - q)).dot(&poly.normal) < -1e-12 * diameter * diameter {
            return Err("polygon not convex and counter-clockwise".into());
        }
    }
    let (fan_area, fan_centroid) = fan_area_centroid(&poly.vertices, &poly.normal);
    if rel(fan_area, poly.area, 1e-300) > 1e-12 || (fan_centroid - poly.centroid).norm() > 1e-12 * diameter.max(1.0) {
        return Err("area or centroid differ from the fan oracle".into());
    }
    if poly.centroid_pressure < 0.0 || poly.area < MIN_POLYGON_AREA {
        return Err("negative pressure or sub-threshold area".into());
    }
    let (pa, pb) = (eval_affine(&fa, &poly.centroid), eval_affine(&fb, &poly.centroid));
    let pressure_error = (pa - pb).abs().max((pa - poly.centroid_pressure).abs()) / poly.centroid_pressure.max(1.0);
    let exact_area_error = (poly.area - exact).abs() / exact.max(1e-6);

    // Monte-Carlo over the exact corners' bounding box grown by 5% per side,
    // so that a polygon spilling past the true region would still register.
    let bound = |k: usize| {
        let lo = corners.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min);
        let hi = corners.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max);
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    };
    let ((x0, x1), (y0, y1)) = (bound(0), bound(1));
    let (lo, hi) = ([x0, y0], [x1, y1]);
    let bary_map = |t: &Tet| {
        let b0 = barycentric(t, &frame.to_3d([0.0, 0.0]));
        let b1 = barycentric(t, &frame.to_3d([1.0, 0.0]));
        let b2 = barycentric(t, &frame.to_3d([0.0, 1.0]));
        std::array::from_fn::<_, 4, _>(|i| (b0[i], b1[i] - b0[i], b2[i] - b0[i]))
    };
    let (ma2, mb2) = (bary_map(&pair.a), bary_map(&pair.b));
    let inside2 = |m: &[(f64, f64, f64); 4], u: [f64; 2]| m.iter().all(|(c, x, y)| c + x * u[0] + y * u[1] >= 0.0);
    let mc = if corners.len() >= 3 && hi[0] > lo[0] && hi[1] > lo[1] {
        let (area, sigma) = stratified_area(rng, lo, hi, mc_grid, |u| inside2(&ma2, u) && inside2(&mb2, u));
        let rel_sigma = sigma / area.max(1e-300);
        (area > 0.0 && rel_sigma <= 0.0025).then(|| ((poly.area - area).abs() / area, rel_sigma))
    } else {
        None
    };

    // Same pair after a random rigid motion of both bodies.
    let motion = random_pose(rng, 2.0);
    let moved = tet_tet_contact_polygon(&PosedCompliant::new(&ma, &motion), 0, &PosedCompliant::new(&mb, &motion), 0)
        .ok_or("polygon vanished under a rigid motion")?;
    let frame_error = [
        rel(moved.area, poly.area, 1e-300),
        rel(moved.centroid_pressure, poly.centroid_pressure, 1.0),
        rel(moved.grad_a, poly.grad_a, 1e-300),
        rel(moved.grad_b, poly.grad_b, 1e-300),
        (moved.centroid - (motion * nalgebra::Point3::from(poly.centroid)).coords).norm() / diameter.max(1e-12),
        (moved.normal - motion.rotation * poly.normal).norm(),
    ]
    .into_iter()
    .fold(0.0, f64::max);

    Ok(Some(TrialReport {
        vertex_count: n,
        pressure_error,
        exact_area_error,
        mc,
        frame_error,
    }))
}
