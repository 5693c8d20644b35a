use heis::group::{proj_line, proj_perp, second_component};
use heis::measures::{read_cloud, write_cloud};
use heis::*;
use proptest::prelude::*;

fn coord() -> impl Strategy<Value = f64> {
    -10.0..10.0f64
}

fn point() -> impl Strategy<Value = HPoint> {
    (coord(), coord(), coord()).prop_map(|(x, y, t)| HPoint::new(x, y, t))
}

fn near(a: &HPoint, b: &HPoint, tol: f64) -> bool {
    a.euclidean_dist(b) <= tol * (1.0 + a.euclidean_norm().max(b.euclidean_norm()))
}

proptest! {
    #[test]
    fn group_axioms(a in point(), b in point(), c in point()) {
        let lhs = group_mul(&group_mul(&a, &b), &c);
        let rhs = group_mul(&a, &group_mul(&b, &c));
        prop_assert!(near(&lhs, &rhs, 1e-12));
        prop_assert!(near(&group_mul(&a, &group_inv(&a)), &HPoint::IDENTITY, 1e-12));
        prop_assert_eq!(group_mul(&a, &HPoint::IDENTITY), a);
    }

    #[test]
    fn distance_is_a_left_invariant_metric(a in point(), b in point(), c in point(), g in point()) {
        let d = koranyi_dist(&a, &b);
        prop_assert!(d >= 0.0);
        prop_assert!((d - koranyi_dist(&b, &a)).abs() <= 1e-9 * (1.0 + d));
        prop_assert_eq!(koranyi_dist(&a, &a), 0.0);
        prop_assert!(koranyi_dist(&a, &c) <= d + koranyi_dist(&b, &c) + 1e-9 * (1.0 + d));
        let dg = koranyi_dist(&group_mul(&g, &a), &group_mul(&g, &b));
        prop_assert!((dg - d).abs() <= 1e-7 * (1.0 + d));
    }

    #[test]
    fn dilation_scales_distance(a in point(), b in point(), r in 0.01..100.0f64) {
        let d = koranyi_dist(&dilate(r, &a).unwrap(), &dilate(r, &b).unwrap());
        prop_assert!((d - r * koranyi_dist(&a, &b)).abs() <= 1e-9 * (1.0 + d));
    }

    #[test]
    fn projections_recompose(p in point(), th in 0.0..std::f64::consts::PI) {
        let theta = Angle::new(th);
        let v = vertical_projection(&theta, &p);
        let h = horizontal_projection(&theta, &p);
        prop_assert!(near(&group_mul(&v, &h), &p, 1e-12));
        prop_assert!(vertical_chart(&theta, &v).is_ok());
        let back = vertical_embed(&theta, &vertical_chart(&theta, &v).unwrap());
        prop_assert!(near(&back, &v, 1e-12));
        let z = p.z();
        let (l, q) = (proj_line(&theta, z), proj_perp(&theta, z));
        prop_assert!(((l[0] + q[0]) - z[0]).abs() < 1e-12 * (1.0 + z[0].abs()));
        prop_assert!(((l[1] + q[1]) - z[1]).abs() < 1e-12 * (1.0 + z[1].abs()));
    }

    #[test]
    fn second_component_is_the_distance_defect(a in point(), b in point()) {
        // |t-τ-2z∧ζ| enters the distance squared, alongside |z-ζ|^4
        let dz = ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).powi(2);
        let d4 = dz + second_component(&a, &b).powi(2);
        let d = koranyi_dist(&a, &b);
        prop_assert!((d.powi(4) - d4).abs() <= 1e-9 * (1.0 + d4));
    }

    #[test]
    fn cloud_round_trip(pts in prop::collection::vec(point(), 1..50), s in prop::option::of(0.0..4.0f64)) {
        let mut c = WeightedCloud::uniform(pts).unwrap();
        if let Some(s) = s {
            c = c.with_nominal_dim(s);
        }
        let mut buf = Vec::new();
        write_cloud(&mut buf, &c, &["note".into()]).unwrap();
        let back = read_cloud(&buf[..]).unwrap();
        prop_assert_eq!(back.points(), c.points());
        prop_assert_eq!(back.weights(), c.weights());
        prop_assert_eq!(back.nominal_dim(), c.nominal_dim());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn samplers_are_deterministic(seed in any::<u64>(), th in 0.0..3.0f64) {
        prop_assert_eq!(sample_cube(500, seed).unwrap(), sample_cube(500, seed).unwrap());
        let a = sample_vertical_plane(Angle::new(th), 300, seed).unwrap();
        prop_assert_eq!(&a, &sample_vertical_plane(Angle::new(th), 300, seed).unwrap());
        let ifs = IfsSpec::heisenberg_digits(8, 3).unwrap();
        prop_assert_eq!(ifs_generate(&ifs, seed).unwrap(), ifs_generate(&ifs, seed).unwrap());
    }
}

#[test]
fn parallel_estimators_match_across_pool_sizes() {
    let c = sample_cube(20_000, 3).unwrap();
    let plane = sample_vertical_plane(Angle::new(0.9), 50_000, 3).unwrap();
    let scales = [1.0, 0.5, 0.25, 0.125];
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                let b = box_dimension(&c, &scales).unwrap().slope;
                let k = correlation_dimension(&c, &scales).unwrap().slope;
                let radii: Vec<f64> = (0..=16).map(|k| 0.5f64.powf(k as f64 / 2.0)).collect();
                let f = frostman_exponent(&plane, &radii, 16, 1).unwrap().slope;
                (b, k, f)
            })
    };
    assert_eq!(run(1), run(4));
}
