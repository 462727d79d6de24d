use std::collections::BTreeSet;
use std::f64::consts::PI;

use nalgebra::Matrix3;
use proptest::prelude::*;

use seam_core::costs::{eval, parallel_cost, perpendicular_cost, upright_cost, orbit_cost, rotate_cost, move_cost, EvalContext, Scene};
use seam_core::geometry::{
    apply_motion, centroid, euler_from_rotation, extent, principal_axis, rotation_about_axis, rotation_from_euler,
    Dimension, EulerXYZ, Point3, PointCloud, RigidMotion, Vector3,
};
use seam_core::language::Language;
use seam_core::metrics::action_generalizability;
use seam_core::retrieval::levenshtein;
use seam_core::solver::{objective, solve, SolveConfig};

fn unit() -> impl Strategy<Value = Vector3> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
        .prop_filter("non-degenerate", |(x, y, z)| (x * x + y * y + z * z) > 1e-4)
        .prop_map(|(x, y, z)| Vector3::new(x, y, z).normalize())
}

fn rotation() -> impl Strategy<Value = Matrix3<f64>> {
    (unit(), -PI..PI).prop_map(|(axis, angle)| rotation_about_axis(&axis, angle))
}

fn point() -> impl Strategy<Value = Point3> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64).prop_map(|(x, y, z)| Point3::new(x, y, z))
}

/// Rod of 21 points along `dir`, slightly thickened so PCA is well posed.
fn rod(center: Point3, dir: Vector3) -> PointCloud {
    let side = if dir.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let n = dir.cross(&side).normalize() * 0.01;
    let pts: Vec<Point3> = (-10..=10)
        .map(|i| center + dir * (i as f64 * 0.02) + n * f64::from(i % 2))
        .collect();
    PointCloud::new(pts).unwrap()
}

fn cloud() -> impl Strategy<Value = PointCloud> {
    prop::collection::vec(point(), 3..40).prop_map(|v| PointCloud::new(v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn euler_round_trip(r in rotation()) {
        let e = euler_from_rotation(&r);
        prop_assume!((e.ry.abs() - PI / 2.0).abs() >= 1e-3);
        let back = rotation_from_euler(&e);
        prop_assert!((back - r).norm() < 1e-6);
        for a in [e.rx, e.ry, e.rz] {
            prop_assert!(a > -PI && a <= PI);
        }
    }

    #[test]
    fn parallel_plus_perpendicular_is_one(a in unit(), b in unit()) {
        let p = parallel_cost(&a, &b).unwrap();
        let q = perpendicular_cost(&a, &b).unwrap();
        prop_assert!((p + q - 1.0).abs() <= 1e-12);
        prop_assert!(p >= 0.0 && q >= 0.0);
        prop_assert_eq!(parallel_cost(&-a, &b).unwrap(), p);
        prop_assert_eq!(perpendicular_cost(&a, &-b).unwrap(), q);
    }

    #[test]
    fn cost_functions_are_non_negative(a in point(), b in point(), axis in unit(), r in 0.0..1.0f64,
                                       angle in -PI..PI, u in unit(), v in unit()) {
        prop_assert!(move_cost(&a, &b) >= 0.0);
        prop_assert!(orbit_cost(&a, &axis, r, &b).unwrap() >= 0.0);
        if let Ok(c) = upright_cost(&a, &b) {
            prop_assert!((0.0..=2.0).contains(&c));
        }
        if let Ok(c) = rotate_cost(&axis, angle, &u, &v) {
            prop_assert!((0.0..=1.0).contains(&c));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn centroid_is_equivariant(c in cloud(), r in rotation(), t in point()) {
        let motion = RigidMotion { rotation: r, from: Point3::origin(), to: t };
        let moved = apply_motion(&c, &motion);
        prop_assert!((centroid(&moved) - motion.apply_point(&centroid(&c))).norm() < 1e-9);
    }

    #[test]
    fn principal_axis_is_equivariant_up_to_sign(dir in unit(), r in rotation(), t in point()) {
        let c = rod(Point3::origin(), dir);
        let motion = RigidMotion { rotation: r, from: Point3::origin(), to: t };
        let a = principal_axis(&apply_motion(&c, &motion)).unwrap();
        let b = r * principal_axis(&c).unwrap();
        prop_assert!((a - b).norm() < 1e-6 || (a + b).norm() < 1e-6);
    }

    #[test]
    fn same_pose_transform_is_identity(c in cloud(), t in point()) {
        let motion = RigidMotion { rotation: Matrix3::identity(), from: t, to: t };
        let moved = apply_motion(&c, &motion);
        for (p, q) in c.points().iter().zip(moved.points()) {
            prop_assert!((p - q).norm() <= 1e-12);
        }
    }

    #[test]
    fn extent_ignores_point_order(c in cloud(), seed in any::<u64>()) {
        let mut pts = c.points().to_vec();
        let k = (seed as usize) % pts.len();
        pts.rotate_left(k);
        pts.reverse();
        let shuffled = PointCloud::new(pts).unwrap();
        for d in [Dimension::Height, Dimension::Width, Dimension::Length] {
            prop_assert!(extent(&c, d) >= 0.0);
            prop_assert_eq!(extent(&c, d), extent(&shuffled, d));
        }
    }

    #[test]
    fn alignment_terms_are_rigidly_invariant(a in unit(), b in unit(), r in rotation(), t in point()) {
        let scene = Scene::new(Point3::origin())
            .with_part("a", rod(Point3::new(0.3, 0.0, 0.0), a), false, None)
            .with_part("b", rod(Point3::new(-0.3, 0.2, 0.1), b), false, None);
        let motion = RigidMotion { rotation: r, from: Point3::origin(), to: t };
        let all: BTreeSet<String> = ["a".to_string(), "b".to_string()].into();
        let moved = scene.apply_motion(&motion, &all);
        let lang = Language::default();
        for src in ["parallel_cost(get_axis('a'), get_axis('b'))", "perpendicular_cost(get_axis('a'), get_axis('b'))"] {
            let e = lang.compile(src).unwrap();
            let before = eval(&e, &EvalContext::new(&scene)).unwrap().value();
            let after = eval(&e, &EvalContext::new(&moved)).unwrap().value();
            prop_assert!((before - after).abs() < 1e-6, "{} {} {}", src, before, after);
        }
    }

    #[test]
    fn sums_are_exactly_additive(a in point(), b in point(), c in point()) {
        let one = |p: Point3| PointCloud::new(vec![p]).unwrap();
        let scene = Scene::new(c).with_part("a", one(a), false, None).with_part("b", one(b), false, None);
        let lang = Language::default();
        let ctx = EvalContext::new(&scene);
        let x = eval(&lang.compile("move_cost('a', 'b')").unwrap(), &ctx).unwrap().value();
        let y = eval(&lang.compile("move_cost('gripper', 'a', offset=[0, 0, 0.1])").unwrap(), &ctx).unwrap().value();
        let both = lang.compile("move_cost('a', 'b') + move_cost('gripper', 'a', offset=[0, 0, 0.1])").unwrap();
        prop_assert_eq!(eval(&both, &ctx).unwrap().value(), x + y);
    }

    #[test]
    fn levenshtein_is_a_metric(a in "[a-d ]{0,10}", b in "[a-d ]{0,10}", c in "[a-d ]{0,10}") {
        let d = |x: &str, y: &str| levenshtein(x, y);
        prop_assert_eq!(d(&a, &b), d(&b, &a));
        prop_assert_eq!(d(&a, &a), 0);
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c));
        prop_assert!(d(&a, &b) <= a.chars().count().max(b.chars().count()));
    }

    #[test]
    fn levenshtein_identity_of_indiscernibles(a in "[a-c]{0,8}", b in "[a-c]{0,8}") {
        prop_assert_eq!(levenshtein(&a, &b) == 0, a == b);
    }

    #[test]
    fn generalizability_identities(v in 0usize..200, t in 1usize..200) {
        let ag = action_generalizability(v, t).unwrap();
        prop_assert_eq!(ag + v as f64 / t as f64, 1.0);
        prop_assert!(action_generalizability(v + 1, t).unwrap() < ag);
    }
}

fn cube_scene(target: Point3) -> Scene {
    let blob = |c: Point3| {
        let d = 0.01;
        let mut pts = Vec::new();
        for x in [-d, d] {
            for y in [-d, d] {
                for z in [-d, d] {
                    pts.push(c + Vector3::new(x, y, z));
                }
            }
        }
        PointCloud::new(pts).unwrap()
    };
    let start = Point3::new(0.0, 0.0, 0.2);
    Scene::new(start).with_part("cube", blob(start), true, None).with_part("target", blob(target), false, None)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn solver_is_deterministic_and_never_worse(seed in any::<u64>(), x in -0.3..0.3f64, y in -0.3..0.3f64) {
        let scene = cube_scene(Point3::new(x, y, 0.0));
        let expr = Language::default().compile("move_cost('cube', 'target', offset=[0, 0, 0.1]) + parallel_cost(get_axis('gripper'), [0, 0, 1])").unwrap();
        let cfg = SolveConfig { seed, restarts: 3, ..SolveConfig::default() };
        let a = solve(&expr, &scene, &cfg).unwrap();
        let b = solve(&expr, &scene, &cfg).unwrap();
        prop_assert_eq!(&a, &b);
        let start = objective(&expr, &scene, &scene.gripper.pose(), &cfg).unwrap().total;
        prop_assert!(a.objective <= start);
        let again = objective(&expr, &scene, &a.pose, &cfg).unwrap();
        prop_assert!((again.total - a.objective).abs() <= 1e-9);
        prop_assert!((a.cost_term + cfg.alpha * a.reg_translation + cfg.beta * a.reg_rotation - a.objective).abs() <= 1e-9);
    }

    #[test]
    fn zero_program_stays_put(alpha in 1e-3..1.0f64, beta in 1e-3..1.0f64, seed in any::<u64>()) {
        let scene = cube_scene(Point3::new(0.2, 0.1, 0.0));
        let expr = Language::default().compile("0").unwrap();
        let cfg = SolveConfig { alpha, beta, seed, ..SolveConfig::default() };
        let r = solve(&expr, &scene, &cfg).unwrap();
        let p0 = scene.gripper.pose();
        prop_assert!((r.pose.translation - p0.translation).norm() <= 1e-6);
        prop_assert!((r.pose.rotation() - p0.rotation()).norm() <= 1e-6);
        prop_assert_eq!(r.objective, 0.0);
    }
}

#[test]
fn euler_components_match_definition() {
    let e = EulerXYZ::new(0.3, -0.4, 1.1);
    let r = rotation_from_euler(&e);
    let expected = rotation_about_axis(&Vector3::x(), 0.3) * rotation_about_axis(&Vector3::y(), -0.4) * rotation_about_axis(&Vector3::z(), 1.1);
    assert!((r - expected).norm() < 1e-12);
}
