use crate::mesh::{AffineField, Vec3};

/// A plane through `point` with unit `normal`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Plane {
    pub point: Vec3,
    pub normal: Vec3,
}

impl Plane {
    pub fn signed_distance(&self, x: &Vec3) -> f64 {
        self.normal.dot(&(x - self.point))
    }

    pub fn project(&self, x: &Vec3) -> Vec3 {
        x - self.normal * self.signed_distance(x)
    }
}

/// Relative gradient difference below which two fields count as parallel.
pub const PARALLEL_TOLERANCE: f64 = 1e-10;

/// The plane on which two affine pressure functions agree.
///
/// The normal is oriented along `∇L_b − ∇L_a`, i.e. from the body owning
/// `la` into the body owning `lb` when both fields increase inward. Returns
/// `None` when the gradients are (nearly) equal and no unique plane exists.
pub fn equilibrium_plane(la: &AffineField, lb: &AffineField) -> Option<Plane> {
    let diff = lb.gradient - la.gradient;
    let norm = diff.norm();
    let scale = la.gradient.norm().max(lb.gradient.norm());
    if !(norm > PARALLEL_TOLERANCE * scale) || norm == 0.0 {
        return None;
    }
    // Solve la(x) = lb(x) along the difference direction from la's origin.
    let gap = la.value - lb.eval(&la.origin);
    let point = la.origin + diff * (gap / (norm * norm));
    Some(Plane {
        point,
        normal: diff / norm,
    })
}

/// Vertex triples of the four faces with the index of the opposite vertex.
const FACES: [[usize; 4]; 4] = [[1, 2, 3, 0], [0, 3, 2, 1], [0, 1, 3, 2], [0, 2, 1, 3]];

/// Outward face planes of a positively oriented tet as `(point, normal)`;
/// the interior satisfies `normal · (x − point) <= 0` for all four.
pub fn tet_half_spaces(tet: &[Vec3; 4]) -> [(Vec3, Vec3); 4] {
    FACES.map(|[a, b, c, opposite]| {
        let mut n = (tet[b] - tet[a]).cross(&(tet[c] - tet[a]));
        if n.dot(&(tet[opposite] - tet[a])) > 0.0 {
            n = -n;
        }
        (tet[a], n)
    })
}

/// Clip a convex polygon against the half-space `normal · (x − point) <= 0`.
pub fn clip_half_space(polygon: &[Vec3], point: &Vec3, normal: &Vec3, out: &mut Vec<Vec3>) {
    out.clear();
    let n = polygon.len();
    if n == 0 {
        return;
    }
    let dist: Vec<f64> = polygon.iter().map(|p| normal.dot(&(p - point))).collect();
    for i in 0..n {
        let j = (i + 1) % n;
        let (p, q) = (&polygon[i], &polygon[j]);
        let (sp, sq) = (dist[i], dist[j]);
        if sp <= 0.0 {
            out.push(*p);
        }
        if (sp < 0.0 && sq > 0.0) || (sp > 0.0 && sq < 0.0) {
            out.push(p + (q - p) * (sp / (sp - sq)));
        }
    }
}

/// Drop consecutive vertices closer than `tol`, including the wrap-around.
pub fn remove_duplicates(polygon: &mut Vec<Vec3>, tol: f64) {
    polygon.dedup_by(|a, b| (*a - *b).norm() <= tol);
    while polygon.len() > 1 && (polygon[0] - polygon[polygon.len() - 1]).norm() <= tol {
        polygon.pop();
    }
}

/// Intersection of a convex planar polygon with a tet (possibly empty).
pub fn clip_polygon_by_tet(polygon: &[Vec3], tet: &[Vec3; 4]) -> Vec<Vec3> {
    let mut current = polygon.to_vec();
    let mut scratch = Vec::with_capacity(polygon.len() + 4);
    clip_by_tet_in_place(&mut current, &mut scratch, tet);
    current
}

fn tet_scale(tet: &[Vec3; 4]) -> f64 {
    (tet[1] - tet[0])
        .norm()
        .max((tet[2] - tet[0]).norm())
        .max((tet[3] - tet[0]).norm())
}

pub(crate) fn clip_by_tet_in_place(poly: &mut Vec<Vec3>, scratch: &mut Vec<Vec3>, tet: &[Vec3; 4]) {
    let scale = tet_scale(tet);
    for (point, normal) in tet_half_spaces(tet) {
        if poly.is_empty() {
            return;
        }
        clip_half_space(poly, &point, &normal, scratch);
        std::mem::swap(poly, scratch);
        remove_duplicates(poly, 1e-14 * scale);
    }
}

/// Relative distance under which a tet face counts as lying in the polygon's
/// plane.
pub const COPLANAR_TOLERANCE: f64 = 1e-10;

/// Which body of the pair a tet belongs to. Body A lies on the `−normal`
/// side of the contact plane and body B on the `+normal` side.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Side {
    A,
    B,
}

/// Clip a polygon lying in `plane` by a tet, resolving faces that lie in the
/// plane itself. The polygon survives such a face only when the tet sits on
/// its own body's side of the plane. A face shared by two tets of one body
/// is therefore counted exactly once, and a boundary face that merely
/// touches the other body is kept. Returns `false` when the polygon is
/// rejected.
pub(crate) fn clip_by_tet_on_plane(
    poly: &mut Vec<Vec3>,
    scratch: &mut Vec<Vec3>,
    tet: &[Vec3; 4],
    plane: &Plane,
    side: Side,
) -> bool {
    let scale = tet_scale(tet);
    let tol = COPLANAR_TOLERANCE * scale;
    for ([a, b, c, _], (point, normal)) in FACES.iter().zip(tet_half_spaces(tet)) {
        if poly.is_empty() {
            return false;
        }
        if [a, b, c].iter().all(|&&i| plane.signed_distance(&tet[i]).abs() <= tol) {
            let toward = normal.dot(&plane.normal);
            let own_side = match side {
                Side::A => toward > 0.0,
                Side::B => toward < 0.0,
            };
            if own_side {
                continue;
            }
            poly.clear();
            return false;
        }
        clip_half_space(poly, &point, &normal, scratch);
        std::mem::swap(poly, scratch);
        remove_duplicates(poly, 1e-14 * scale);
    }
    !poly.is_empty()
}

/// Area, centroid and in-plane orientation check of a planar polygon about
/// `normal`. Area is signed: positive for counter-clockwise winding.
pub fn polygon_area_centroid(polygon: &[Vec3], normal: &Vec3) -> (f64, Vec3) {
    let n = polygon.len();
    if n < 3 {
        return (0.0, polygon.first().copied().unwrap_or_else(Vec3::zeros));
    }
    let origin = polygon[0];
    let mut area = 0.0;
    let mut weighted = Vec3::zeros();
    for i in 1..n - 1 {
        let a = polygon[i] - origin;
        let b = polygon[i + 1] - origin;
        let tri = 0.5 * a.cross(&b).dot(normal);
        area += tri;
        weighted += (a + b) * (tri / 3.0);
    }
    if area == 0.0 {
        let mean = polygon.iter().sum::<Vec3>() / n as f64;
        return (0.0, mean);
    }
    (area, origin + weighted / area)
}
