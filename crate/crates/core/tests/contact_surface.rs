mod common;

use common::tet_pair::{check_tet_pair, random_tet_pair};
use common::*;
use hydroelastic::contact_surface::{
    clip_polygon_by_tet, compute_contact_surface, equilibrium_plane, rigid_tri_contact_polygon, triangulate,
    ContactGeometry, ContactPolygon, ContactSurface, PosedCompliant, PosedRigid, Tessellation,
};
use hydroelastic::mesh::{AffineField, RigidPose, SurfaceMesh, Vec3};
use hydroelastic::pressure_field::{make_box, make_cylinder, RigidGeometry};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn random_equilibrium_planes_zero_the_pressure_difference() {
    let mut rng = rng(1);
    for _ in 0..200 {
        let la = AffineField::new(unit_vector(&mut rng), rng.gen_range(0.0..10.0), unit_vector(&mut rng) * 3.0);
        let lb = AffineField::new(unit_vector(&mut rng), rng.gen_range(0.0..10.0), unit_vector(&mut rng) * 2.0);
        let plane = equilibrium_plane(&la, &lb).expect("non-parallel");
        let (e1, e2) = plane_basis(&plane.normal);
        for _ in 0..100 {
            let x = plane.point + e1 * rng.gen_range(-5.0..5.0) + e2 * rng.gen_range(-5.0..5.0);
            let (a, b) = (la.eval(&x), lb.eval(&x));
            assert!((a - b).abs() < 1e-9 * (a.abs() + 1.0), "{a} vs {b}");
        }
        let d = (la.gradient - lb.gradient).normalize();
        assert!(plane.normal.cross(&d).norm() < 1e-12);
    }
}

#[test]
fn square_clipped_by_regular_tet_matches_monte_carlo() {
    let s = 1.0 / 3f64.sqrt();
    let tet = [
        Vec3::new(s, s, s),
        Vec3::new(s, -s, -s),
        Vec3::new(-s, s, -s),
        Vec3::new(-s, -s, s),
    ];
    let z = 0.1;
    let square = vec![
        Vec3::new(-2.0, -2.0, z),
        Vec3::new(2.0, -2.0, z),
        Vec3::new(2.0, 2.0, z),
        Vec3::new(-2.0, 2.0, z),
    ];
    let clipped = clip_polygon_by_tet(&square, &tet);
    let (area, _) = fan_area_centroid(&clipped, &Vec3::z());
    let mut rng = rng(2);
    let n = 1_000_000;
    let hits = (0..n)
        .filter(|_| inside(&tet, &Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), z)))
        .count();
    let mc = 4.0 * hits as f64 / n as f64;
    assert!((area - mc).abs() / mc < 0.005, "clipped {area} vs Monte Carlo {mc}");
}

#[test]
fn random_tet_pairs_match_oracles() {
    let mut rng = rng(3);
    let (mut polygons, mut compared) = (0, 0);
    for trial in 0..1000 {
        let pair = random_tet_pair(&mut rng);
        match check_tet_pair(&pair, &mut rng, 256) {
            Ok(Some(r)) => {
                polygons += 1;
                assert!(r.vertex_count <= 8);
                assert!(r.pressure_error <= 1e-9, "trial {trial}: pressure {:e}", r.pressure_error);
                assert!(r.exact_area_error <= 1e-9, "trial {trial}: area {:e}", r.exact_area_error);
                assert!(r.frame_error <= 1e-10, "trial {trial}: frame {:e}", r.frame_error);
                if let Some((err, _)) = r.mc {
                    compared += 1;
                    assert!(err <= 0.01, "trial {trial}: Monte-Carlo area off by {err}");
                }
            }
            Ok(None) => {}
            Err(e) => panic!("trial {trial}: {e}"),
        }
    }
    assert!(polygons > 700, "only {polygons} trials produced contact");
    assert!(compared > polygons / 2, "only {compared} Monte-Carlo comparisons");
}

fn triangle_geometry(tri: [Vec3; 3]) -> RigidGeometry {
    RigidGeometry::new(SurfaceMesh::new(tri.to_vec(), vec![[0, 1, 2]]).unwrap())
}

#[test]
fn rigid_triangles_are_clipped_to_the_tet() {
    let mut rng = rng(4);
    let mut polygons = 0;
    for _ in 0..1000 {
        let t = random_tet(&mut rng, Vec3::zeros(), 1.0);
        let values = [rng.gen_range(0.0..1e4), rng.gen_range(0.0..1e4), rng.gen_range(0.0..1e4), rng.gen_range(0.0..1e4)];
        let mesh = single_tet(&t, values);
        let tri = [
            unit_vector(&mut rng) * rng.gen_range(0.2..1.5),
            unit_vector(&mut rng) * rng.gen_range(0.2..1.5),
            unit_vector(&mut rng) * rng.gen_range(0.2..1.5),
        ];
        let n = (tri[1] - tri[0]).cross(&(tri[2] - tri[0]));
        if n.norm() < 1e-3 {
            continue;
        }
        let rigid = triangle_geometry(tri);
        let id = RigidPose::identity();
        let pr = PosedRigid::new(&rigid, &id);
        let pc = PosedCompliant::new(&mesh, &id);
        let frame = PlaneFrame::new(tri[0], n);
        let mut hp = frame.triangle_half_planes(&tri);
        hp.extend(frame.tet_half_planes(&t));
        let (exact, _) = half_plane_area(&hp, 1.0);
        let field = plane_fit(&t, &values);
        for rigid_is_a in [true, false] {
            let Some(poly) = rigid_tri_contact_polygon(&pr, 0, &pc, 0, rigid_is_a) else {
                assert!(exact < 1e-9, "missed area {exact}");
                continue;
            };
            polygons += 1;
            assert!(poly.vertices.len() <= 7);
            assert!((poly.area - exact).abs() <= 1e-9 * exact.max(1e-6));
            for v in &poly.vertices {
                assert!((v - tri[0]).dot(&n.normalize()).abs() < 1e-12, "off the triangle plane");
                let b = barycentric(&t, v);
                assert!(b.iter().all(|&x| x > -1e-9), "outside the tet: {b:?}");
            }
            let p = eval_affine(&field, &poly.centroid);
            assert!((poly.centroid_pressure - p.max(0.0)).abs() <= 1e-9 * p.abs().max(1.0));
            let outward = n.normalize();
            let expected = if rigid_is_a { outward } else { -outward };
            assert!((poly.normal - expected).norm() < 1e-12);
            let rigid_grad = if rigid_is_a { poly.grad_a } else { poly.grad_b };
            assert!(rigid_grad.is_infinite());
        }
    }
    assert!(polygons > 300);
}

#[test]
fn pressed_coin_patch_has_disk_area() {
    let (r, h) = (1.213e-2, 1.75e-3);
    let plane = ContactGeometry::rigid(RigidGeometry::make_plane(1.0).unwrap()).unwrap();
    for resolution in [r / 8.0, r / 12.0] {
        let coin = ContactGeometry::compliant(make_cylinder(r, h, 1e9, resolution).unwrap()).unwrap();
        let pose = RigidPose::translation(0.0, 0.0, h / 2.0 - 1e-4);
        let s = compute_contact_surface(&plane, &RigidPose::identity(), &coin, &pose, Tessellation::Polygonal).unwrap();
        let disk = std::f64::consts::PI * r * r;
        assert!(
            (s.total_area() - disk).abs() / disk < 0.02,
            "resolution {resolution}: area {} vs {disk}",
            s.total_area()
        );
    }
}

fn coin_surface() -> ContactSurface {
    let plane = ContactGeometry::rigid(RigidGeometry::make_plane(1.0).unwrap()).unwrap();
    let coin = ContactGeometry::compliant(make_cylinder(1.213e-2, 1.75e-3, 1e9, 1.5e-3).unwrap()).unwrap();
    let pose = RigidPose::new(Vec3::new(0.001, -0.002, 8.75e-4 - 3e-5), Vec3::new(0.01, -0.02, 0.3));
    compute_contact_surface(&plane, &RigidPose::identity(), &coin, &pose, Tessellation::Polygonal).unwrap()
}

#[test]
fn tessellation_modes_agree_on_a_tilted_coin() {
    let poly = coin_surface();
    assert!(poly.face_count() > 50);
    let tri = triangulate(&poly);
    assert_eq!(tri.mode, Tessellation::Triangulated);
    let recount: usize = poly.polygons.iter().map(|p| p.vertices.len()).sum();
    assert_eq!(tri.face_count(), recount);
    assert!(tri.polygons.iter().all(|p| p.vertices.len() == 3));
    assert!(rel(tri.total_area(), poly.total_area(), 0.0) < 1e-12);
    let (fp, ft) = (poly.net_force(), tri.net_force());
    assert!((fp - ft).norm() <= 1e-12 * fp.norm(), "{fp:?} vs {ft:?}");
}

#[test]
fn separated_bodies_have_empty_surfaces() {
    let a = ContactGeometry::compliant(make_box(Vec3::new(0.1, 0.1, 0.1), 1e5, 0.05).unwrap()).unwrap();
    let b = ContactGeometry::compliant(make_box(Vec3::new(0.1, 0.1, 0.1), 1e5, 0.05).unwrap()).unwrap();
    let far = RigidPose::translation(0.0, 0.0, 0.25);
    let s = compute_contact_surface(&a, &RigidPose::identity(), &b, &far, Tessellation::Polygonal).unwrap();
    assert_eq!(s.face_count(), 0);
}

#[test]
fn swapping_roles_negates_the_force() {
    let a = ContactGeometry::compliant(make_box(Vec3::new(0.1, 0.1, 0.1), 1e5, 0.05).unwrap()).unwrap();
    let b = ContactGeometry::compliant(make_box(Vec3::new(0.1, 0.1, 0.1), 1e5, 0.05).unwrap()).unwrap();
    let (pa, pb) = (RigidPose::identity(), RigidPose::translation(0.0, 0.0, 0.19));
    let ab = compute_contact_surface(&a, &pa, &b, &pb, Tessellation::Polygonal).unwrap();
    let ba = compute_contact_surface(&b, &pb, &a, &pa, Tessellation::Polygonal).unwrap();
    assert!(ab.face_count() > 0);
    for p in &ab.polygons {
        assert!((0.09..=0.1).contains(&p.centroid.z), "outside the overlap slab");
    }
    let (f, g) = (ab.net_force(), ba.net_force());
    assert!(f.z > 0.0);
    assert!((f + g).norm() <= 1e-12 * f.norm(), "{f:?} vs {g:?}");
    assert!(rel(ab.total_area(), ba.total_area(), 0.0) < 1e-12);
}

fn random_polygon(rng: &mut impl Rng) -> ContactPolygon {
    let n = unit_vector(rng);
    let (e1, e2) = plane_basis(&n);
    let k = rng.gen_range(3..=8);
    let mut angles: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
    angles.sort_by(f64::total_cmp);
    let c = unit_vector(rng);
    let vertices: Vec<Vec3> = angles.iter().map(|a| c + (e1 * a.cos() + e2 * a.sin()) * 0.5).collect();
    let (area, centroid) = fan_area_centroid(&vertices, &n);
    ContactPolygon {
        vertices,
        area,
        centroid,
        normal: n,
        centroid_pressure: 100.0,
        pressure_gradient: e1 * rng.gen_range(-50.0..50.0) + e2 * rng.gen_range(-50.0..50.0),
        grad_a: 1.0,
        grad_b: 1.0,
        element_a: 0,
        element_b: 0,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn fans_preserve_area_and_force(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let polygons: Vec<ContactPolygon> = (0..4).map(|_| random_polygon(&mut rng)).collect();
        let surface = ContactSurface { body_a: 0, body_b: 1, mode: Tessellation::Polygonal, polygons };
        let fan = triangulate(&surface);
        for (i, p) in surface.polygons.iter().enumerate() {
            let start: usize = surface.polygons[..i].iter().map(|q| q.vertices.len()).sum();
            let parts = &fan.polygons[start..start + p.vertices.len()];
            let area: f64 = parts.iter().map(|t| t.area).sum();
            prop_assert!((area - p.area).abs() <= 1e-12 * p.area);
            let force: Vec3 = parts.iter().map(|t| t.elastic_force()).sum();
            prop_assert!((force - p.elastic_force()).norm() <= 1e-12 * p.elastic_force().norm());
            for t in parts {
                prop_assert!((t.centroid_pressure - p.pressure_at(&t.centroid)).abs() <= 1e-12 * 200.0);
            }
        }
    }

    #[test]
    fn rigid_motion_commutes_with_box_contact(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let a = ContactGeometry::compliant(make_box(Vec3::new(0.1, 0.08, 0.06), 1e5, 0.04).unwrap()).unwrap();
        let b = ContactGeometry::compliant(make_box(Vec3::new(0.07, 0.1, 0.05), 2e5, 0.04).unwrap()).unwrap();
        let pa = random_pose(&mut rng, 0.02);
        let pb = pa * random_pose(&mut rng, 0.08);
        let s = compute_contact_surface(&a, &pa, &b, &pb, Tessellation::Polygonal).unwrap();
        let m = random_pose(&mut rng, 1.0);
        let moved = compute_contact_surface(&a, &(m * pa), &b, &(m * pb), Tessellation::Polygonal).unwrap();
        // Sub-threshold slivers may flip between the two, so compare totals.
        prop_assert!(rel(s.total_area(), moved.total_area(), 1e-300) <= 1e-10);
        let (f, g) = (s.net_force(), moved.net_force());
        prop_assert!((m.rotation * f - g).norm() <= 1e-10 * f.norm().max(1e-12));
        let o = pa.translation.vector;
        let (ms, mm) = (s.net_moment(&o), moved.net_moment(&(m * nalgebra::Point3::from(o)).coords));
        prop_assert!((m.rotation * ms - mm).norm() <= 1e-10 * (ms.norm() + 0.1 * f.norm()).max(1e-12));
    }
}
