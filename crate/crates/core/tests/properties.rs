use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use quadric_cr::convex::{support_function, ConvexBody};
use quadric_cr::model::{inverse, multiply};
use quadric_cr::spectral::spectral_data;
use quadric_cr::{GroupPoint, QuadraticModel, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn model(seed: u64) -> QuadraticModel {
    QuadraticModel::random(2, 2, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn point() -> impl Strategy<Value = GroupPoint> {
    (prop::collection::vec(-2.0..2.0f64, 4), prop::collection::vec(-3.0..3.0f64, 2))
        .prop_map(|(z, x)| GroupPoint::new(vec![C64::new(z[0], z[1]), C64::new(z[2], z[3])], x))
}

fn vec3() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, 3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn group_law_is_associative(seed in 0u64..1000, p in point(), q in point(), r in point()) {
        let m = model(seed);
        let a = multiply(&m, &multiply(&m, &p, &q).unwrap(), &r).unwrap();
        let b = multiply(&m, &p, &multiply(&m, &q, &r).unwrap()).unwrap();
        for (u, v) in a.x.iter().zip(&b.x) {
            assert_abs_diff_eq!(u, v, epsilon = 1e-10);
        }
        for (u, v) in a.zeta.iter().zip(&b.zeta) {
            assert_abs_diff_eq!((u - v).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn inverse_gives_identity(seed in 0u64..1000, p in point()) {
        let m = model(seed);
        let e = multiply(&m, &p, &inverse(&m, &p).unwrap()).unwrap();
        for v in &e.x {
            assert_abs_diff_eq!(*v, 0.0, epsilon = 1e-12);
        }
        for z in &e.zeta {
            assert_abs_diff_eq!(z.norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn spectral_invariants_hold(seed in 0u64..1000, l1 in -3.0..3.0f64, l2 in -3.0..3.0f64) {
        prop_assume!(l1.abs() + l2.abs() > 1e-3);
        let m = model(seed);
        let sd = spectral_data(&m, &[l1, l2]).unwrap();
        let probes = vec![vec![C64::new(0.3, -0.2), C64::new(1.0, 0.5)], vec![C64::new(-0.7, 0.1), C64::new(0.2, 0.9)]];
        prop_assert!(sd.check_invariants(&probes).is_ok());
        prop_assert!(sd.pfaffian >= 0.0);
    }

    #[test]
    fn support_function_is_sublinear(
        verts in prop::collection::vec(vec3(), 1..8),
        u in vec3(),
        v in vec3(),
        t in 0.0..5.0f64,
    ) {
        let k = ConvexBody::new(3, verts, false).unwrap();
        let uv: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + b).collect();
        let tu: Vec<f64> = u.iter().map(|a| t * a).collect();
        prop_assert!(support_function(&k, &uv) <= support_function(&k, &u) + support_function(&k, &v) + 1e-12);
        assert_abs_diff_eq!(support_function(&k, &tu), t * support_function(&k, &u), epsilon = 1e-12);
    }

    #[test]
    fn support_function_of_vertices_dominates(verts in prop::collection::vec(vec3(), 1..8), v in vec3()) {
        let k = ConvexBody::new(3, verts.clone(), false).unwrap();
        let h = support_function(&k, &v);
        for p in &verts {
            let dot: f64 = p.iter().zip(&v).map(|(a, b)| a * b).sum();
            prop_assert!(-dot <= h + 1e-12);
        }
    }
}
