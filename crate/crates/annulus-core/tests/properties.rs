use annulus_core::*;
use proptest::prelude::*;

fn shear(a: f64, b: f64) -> impl LiftMap {
    FnMap {
        forward: move |p: LiftPoint| LiftPoint::new(p.x + a + b * (2.0 * std::f64::consts::PI * p.y).sin(), p.y),
        backward: move |p: LiftPoint| LiftPoint::new(p.x - a - b * (2.0 * std::f64::consts::PI * p.y).sin(), p.y),
    }
}

proptest! {
    #[test]
    fn circle_norm_range_and_periodicity(x in -1e6f64..1e6, k in -1000i64..1000) {
        let n = circle_norm(x);
        prop_assert!((0.0..=0.5).contains(&n));
        prop_assert!((circle_norm(x + k as f64) - n).abs() < 1e-9);
        prop_assert!((circle_norm(-x) - n).abs() < 1e-9);
    }

    #[test]
    fn annulus_distance_is_a_metric(ax in 0f64..1.0, ay in 0f64..=1.0, bx in 0f64..1.0, by in 0f64..=1.0, cx in 0f64..1.0, cy in 0f64..=1.0) {
        let (a, b, c) = (Point::new(ax, ay), Point::new(bx, by), Point::new(cx, cy));
        prop_assert_eq!(annulus_distance(a, b), annulus_distance(b, a));
        prop_assert!(annulus_distance(a, c) <= annulus_distance(a, b) + annulus_distance(b, c) + 1e-15);
        prop_assert!(annulus_distance(a, a) == 0.0);
    }

    #[test]
    fn sampled_c0_is_pseudometric(a in -1f64..1.0, b in -0.2f64..0.2, c in -1f64..1.0, d in -0.2f64..0.2, e in -1f64..1.0) {
        let grid = SampleGrid::new(32, 9);
        let (f, g, h) = (shear(a, b), shear(c, d), shear(e, 0.0));
        let fg = c0_distance(&f, &g, grid).sup;
        prop_assert_eq!(fg, c0_distance(&g, &f, grid).sup);
        prop_assert!(c0_distance(&f, &h, grid).sup <= fg + c0_distance(&g, &h, grid).sup + 1e-12);
    }

    #[test]
    fn refinement_is_monotone(a in -1f64..1.0, b in -0.2f64..0.2) {
        let grid = SampleGrid::new(8, 5);
        let coarse = c0_distance(&shear(a, b), &IdentityMap, grid).sup;
        let fine = c0_distance(&shear(a, b), &IdentityMap, grid.refine()).sup;
        prop_assert!(fine >= coarse);
    }

    #[test]
    fn principal_lift_matches_annulus_displacement(a in -3f64..3.0, b in -0.1f64..0.1) {
        let f = shear(a, b);
        let grid = SampleGrid::new(16, 9);
        let disp = c0_distance(&f, &IdentityMap, grid).sup;
        match principal_lift_offset(&f, grid) {
            Ok(k) => {
                let lifted = FnMap { forward: |p: LiftPoint| f.apply(p).deck(k), backward: |p: LiftPoint| f.apply_inverse(p.deck(-k)) };
                let s = lift_sup_distance(&lifted, &IdentityMap, grid).sup;
                prop_assert!((s - disp).abs() < 1e-12);
                prop_assert!(s < 0.5);
            }
            Err(_) => prop_assert!(disp > 0.5 - 2.0 * b.abs() - 1e-12),
        }
    }
}
