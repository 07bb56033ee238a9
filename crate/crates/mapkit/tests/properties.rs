use annulus_core::{c0_distance, circle_norm, mat, IdentityMap, LiftPoint, Point, SampleGrid};
use cf_arith::{BigRational, PartialQuotients, RotationNumber};
use mapkit::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bump_strategy() -> impl Strategy<Value = AnnulusMap> {
    (0.0..1.0f64, 0.3..0.7f64, 0.05..0.2f64, -1.0..1.0f64)
        .prop_map(|(cx, cy, r, s)| AnnulusMap::from_prim(HamiltonianBump::new(cx, cy, r, s, 1).unwrap()))
}

fn leaf() -> impl Strategy<Value = AnnulusMap> {
    prop_oneof![
        (-2.0..2.0f64).prop_map(AnnulusMap::rotation),
        prop::collection::vec(-0.5..0.5f64, 1..4).prop_map(|c| AnnulusMap::from_prim(Twist::new(c))),
        bump_strategy(),
    ]
}

fn tree() -> impl Strategy<Value = AnnulusMap> {
    leaf().prop_recursive(4, 16, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(f, g)| compose(&f, &g)),
            inner.clone().prop_map(|f| f.inverse()),
            (inner, 1i64..5).prop_map(|(f, n)| iterate(&f, n)),
        ]
    })
}

fn point() -> impl Strategy<Value = LiftPoint> {
    (-3.0..3.0f64, 0.0..=1.0f64).prop_map(|(x, y)| LiftPoint::new(x, y))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lift_equivariance(f in tree(), p in point(), k in -3i64..4) {
        let a = f.apply(p.deck(k));
        let b = f.apply(p).deck(k);
        prop_assert!(a.dist(b) < 1e-9);
    }

    #[test]
    fn composition_with_inverse_is_identity(f in tree()) {
        let g = compose(&f, &f.inverse());
        let d = c0_distance(&g, &IdentityMap, SampleGrid::default());
        prop_assert!(d.sup < 1e-10, "sup {}", d.sup);
        let h = compose(&f.inverse(), &f);
        prop_assert!(c0_distance(&h, &IdentityMap, SampleGrid::new(64, 17)).sup < 1e-10);
    }

    #[test]
    fn iterate_additive(f in tree(), a in -60i64..60, b in -60i64..60, p in point()) {
        let lhs = iterate(&f, a + b).apply(p);
        let rhs = compose(&iterate(&f, a), &iterate(&f, b)).apply(p);
        prop_assert!(lhs.dist(rhs) < 1e-8);
    }

    #[test]
    fn symplectic_trees_have_unit_determinant(f in tree(), p in point()) {
        prop_assert!(f.area_preserving());
        prop_assert!((jacobian_det(&f, p.project()) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn json_roundtrip(f in tree(), p in point()) {
        let v = f.to_json().unwrap();
        let g = AnnulusMap::from_json(&v, &PrimitiveRegistry::default()).unwrap();
        prop_assert_eq!(f.apply(p), g.apply(p));
    }

    #[test]
    fn twist_composition(c1 in prop::collection::vec(-1.0..1.0f64, 1..4),
                         c2 in prop::collection::vec(-1.0..1.0f64, 1..4), p in point()) {
        let (t1, t2) = (Twist::new(c1), Twist::new(c2));
        let expect = p.x + t1.profile(p.y) + t2.profile(p.y);
        let f = compose(&AnnulusMap::from_prim(t1), &AnnulusMap::from_prim(t2));
        let q = f.apply(p);
        prop_assert!((q.x - expect).abs() < 1e-12 && q.y == p.y);
    }

    #[test]
    fn rotations_add(a in -3.0..3.0f64, b in -3.0..3.0f64, p in point()) {
        let f = compose(&AnnulusMap::rotation(a), &AnnulusMap::rotation(b));
        prop_assert!((f.apply(p).x - (p.x + a + b)).abs() < 1e-12);
    }
}

#[test]
fn long_iterates_additive() {
    let bump = AnnulusMap::from_prim(HamiltonianBump::new(0.2, 0.5, 0.2, 0.4, 1).unwrap());
    let generic = compose(&bump, &AnnulusMap::rotation(0.6180339887498949));
    let conj = compose(&bump, &compose(&AnnulusMap::rotation(0.6180339887498949), &bump.inverse()));
    let p = LiftPoint::new(0.31, 0.47);
    // Same-sign splits replay the identical primitive sequence.
    for (a, b) in [(5000, 5000), (9999, 1), (-4000, -6000)] {
        let lhs = iterate(&generic, a + b).apply(p);
        let rhs = compose(&iterate(&generic, a), &iterate(&generic, b)).apply(p);
        assert!(lhs.dist(rhs) < 1e-8, "{a} + {b}");
    }
    for (a, b) in [(-3000, 7000), (5000, -5000), (1, -9999)] {
        let lhs = iterate(&conj, a + b).apply(p);
        let rhs = compose(&iterate(&conj, a), &iterate(&conj, b)).apply(p);
        assert!(lhs.dist(rhs) < 1e-8, "{a} + {b}");
    }
    assert_eq!(iterate(&generic, 0).apply(p), p);
}

#[test]
fn rational_rotation_period() {
    for (p, q) in [(1i64, 7i64), (3, 11), (13, 64), (55, 89)] {
        let t = BigRational::new(p.into(), q.into());
        let f = iterate(&AnnulusMap::rotation_exact(&t), q);
        let d = c0_distance(&f, &IdentityMap, SampleGrid::default());
        assert_eq!(d.sup, 0.0);
        assert_eq!(f.offset(), p);
    }
}

#[test]
fn rotation_iterate_matches_beta() {
    let rn = RotationNumber::from_quotients(PartialQuotients::from_u64(&[1, 2, 3, 4, 5, 6, 7, 8, 9, 10]).unwrap());
    let alpha = rn.to_f64();
    let f = AnnulusMap::rotation(alpha);
    let width = cf_arith::rational_to_f64(&rn.bracket_width());
    for k in 1..8 {
        let qk = i64::try_from(&rn.q(k).unwrap()).unwrap();
        let d = c0_distance(&iterate(&f, qk), &IdentityMap, SampleGrid::default()).sup;
        let beta = cf_arith::rational_to_f64(&rn.beta(k).unwrap());
        assert!((d - beta).abs() <= width * qk as f64 + 1e-12, "k = {k}: {d} vs {beta}");
        assert!((d - circle_norm(qk as f64 * alpha)).abs() < 1e-12);
    }
}

#[test]
fn grid_map_determinant_matches_finite_differences() {
    let field = |p: LiftPoint| {
        let t = std::f64::consts::TAU * p.x;
        LiftPoint::new(p.x + 0.05 * t.sin() * (1.0 + p.y), p.y + 0.03 * p.y * (1.0 - p.y) * t.cos())
    };
    let g = AnnulusMap::from_prim(GridMap::from_fn(128, 65, field));
    assert!(!g.closed_form() || !g.area_preserving());
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..500 {
        let p = Point::new(rng.gen(), rng.gen_range(0.05..0.95));
        let fd = fd_jacobian(|z| g.apply(z), p.lift(), 1e-6);
        assert!((jacobian_det(&g, p) - mat::det(&fd)).abs() < 1e-4);
    }
}

#[test]
fn ak_outputs_preserve_area() {
    let rn = RotationNumber::from_quotients(PartialQuotients::from_u64(&[2, 3, 5, 7, 4, 6, 3, 8]).unwrap());
    let q2 = i64::try_from(&rn.q(2).unwrap()).unwrap() as f64;
    let r2 = 0.4 / q2;
    let stages = vec![
        (1, vec![BumpSpec { cx: 0.1, cy: 0.5, radius: 0.2, strength: 0.6 }]),
        (2, vec![BumpSpec { cx: 0.02, cy: 0.45, radius: r2, strength: -0.9 }]),
    ];
    let schedule = AkSchedule::for_target(&rn, &stages).unwrap();
    let (h, f) = ak_build(&schedule, &rn).unwrap();
    assert!(f.isotopic_to_identity());
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10_000 {
        let p = Point::new(rng.gen(), rng.gen());
        assert!((jacobian_det(&f, p) - 1.0).abs() < 1e-6);
    }
    let p = LiftPoint::new(0.21, 0.5);
    assert!(h.apply_inverse(h.apply(p)).dist(p) < 1e-12);
}
