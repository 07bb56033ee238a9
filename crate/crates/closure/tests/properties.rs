use brouwer::Curve;
use cf_arith::{rational_to_f64, PartialQuotients, RotationNumber};
use closure::{build_tiling_data, Combinatorics};
use mapkit::{AnnulusMap, LiftPoint};
use proptest::prelude::*;

fn rn(q: &[u64]) -> RotationNumber {
    RotationNumber::from_quotients(PartialQuotients::from_u64(q).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn slots_and_tiles_are_in_bijection(q in prop::collection::vec(1u64..40, 7), n in prop::sample::select(vec![1usize, 3, 5])) {
        let c = Combinatorics::new(&rn(&q), n).unwrap();
        prop_assert!(c.matching_shift_is_unit());
        let mut seen = vec![false; c.q_next as usize];
        for slot in 0..c.q_next {
            let j = c.slot_to_tile(slot);
            prop_assert!(!seen[j]);
            seen[j] = true;
            prop_assert_eq!((j as i64 * c.p_next).rem_euclid(c.q_next), slot);
        }
    }

    #[test]
    fn rotation_tilings_follow_the_three_gap_law(q in prop::collection::vec(1u64..6, 6), x0 in 0.0f64..1.0) {
        let alpha = rn(&q);
        let c = Combinatorics::new(&alpha, 3).unwrap();
        prop_assume!(c.q_next <= 300 && c.q_next >= 3);
        let f = AnnulusMap::rotation_exact(&alpha.representative());
        let data = build_tiling_data(&f, &Curve::vertical(x0, 5), &alpha, 3).unwrap();
        let bn = rational_to_f64(&alpha.beta(3).unwrap());
        let bm = rational_to_f64(&alpha.beta(4).unwrap());
        let sum: f64 = data.tile_areas().iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
        for &w in data.tile_areas() {
            prop_assert!((w - bn).abs() < 1e-12 || (w - bn - bm).abs() < 1e-12, "width {}", w);
        }
        // Every sample point lands in a tile whose sides bracket it.
        for i in 0..50 {
            let p = LiftPoint::new(i as f64 / 50.0 + 0.003, 0.5);
            let loc = data.locate(p).unwrap();
            let right = data.curves()[loc.tile].samples()[0].x;
            let left = data.curves()[c.left_neighbour(loc.tile)].samples()[0].x;
            let z = p.x - loc.shift as f64;
            let inside = |a: f64, b: f64| (z - a).rem_euclid(1.0) <= (b - a).rem_euclid(1.0) + 1e-12;
            prop_assert!(inside(left, right), "{:?}", loc);
        }
    }
}
