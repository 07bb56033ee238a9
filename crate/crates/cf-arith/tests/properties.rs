use cf_arith::*;
use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;

fn rat(n: &BigInt, d: &BigInt) -> BigRational {
    BigRational::new(n.clone(), d.clone())
}

fn int(n: &BigInt) -> BigRational {
    BigRational::from_integer(n.clone())
}

/// Direct backward evaluation of `[0; a_1, …, a_k]`.
fn oracle_value(terms: &[u64]) -> BigRational {
    let mut acc = BigRational::zero();
    for &a in terms.iter().rev() {
        acc = BigRational::one() / (BigRational::from_integer(BigInt::from(a)) + acc);
    }
    acc
}

fn quotients() -> impl Strategy<Value = Vec<u64>> {
    prop::collection::vec(1u64..=1_000_000, 24..30)
}

proptest! {
    #[test]
    fn determinant_identity(terms in prop::collection::vec(1u64..=1_000_000, 1..30)) {
        let pq = PartialQuotients::from_u64(&terms).unwrap();
        let cs = convergents(&pq, pq.len()).unwrap();
        for k in 0..pq.len() {
            let det = &cs[k + 1].p * &cs[k].q - &cs[k].p * &cs[k + 1].q;
            let sign = if k % 2 == 0 { BigInt::one() } else { -BigInt::one() };
            prop_assert_eq!(det, sign);
        }
    }

    #[test]
    fn convergents_match_direct_evaluation(terms in prop::collection::vec(1u64..=50, 1..15)) {
        let pq = PartialQuotients::from_u64(&terms).unwrap();
        let cs = convergents(&pq, pq.len()).unwrap();
        for k in 1..=terms.len() {
            let v = oracle_value(&terms[..k]);
            prop_assert_eq!(&cs[k].p, v.numer());
            prop_assert_eq!(&cs[k].q, v.denom());
            prop_assert!(cs[k].p.gcd(&cs[k].q).is_one());
        }
    }

    #[test]
    fn expand_then_convergents_roundtrip(n in 1u64..1_000_000_000, d in 2u64..1_000_000_000) {
        prop_assume!(n < d);
        let x = BigRational::new(n.into(), d.into());
        let pq = cf_expand(&x).unwrap();
        prop_assert!(pq.terms().iter().all(|a| *a >= BigUint::one()));
        let cs = convergents(&pq, pq.len()).unwrap();
        prop_assert_eq!(cs.last().unwrap().value(), x);
    }

    #[test]
    fn approximation_bounds(terms in quotients()) {
        let r = RotationNumber::from_quotients(PartialQuotients::from_u64(&terms).unwrap());
        let alpha = r.representative();
        let orbit = gauss_orbit(&alpha, 22);
        for k in 0..=20 {
            let qk = int(&r.q(k).unwrap());
            let qk1 = int(&r.q(k + 1).unwrap());
            let qk2 = int(&r.q(k + 2).unwrap());
            let beta = r.beta(k).unwrap();
            prop_assert_eq!(&beta, &orbit.betas[k]);
            let two = BigRational::from_integer(2.into());
            // 1/(2q_{k+1}) < 1/(q_k+q_{k+1}) < β_k < 1/q_{k+1}
            prop_assert!((&two * &qk1).recip() < (&qk + &qk1).recip());
            prop_assert!((&qk + &qk1).recip() < beta);
            prop_assert!(beta < qk1.recip());
            // α_k and 1/a_{k+1} in (q_k/(2q_{k+1}), 2q_k/q_{k+1})
            let lo = &qk / (&two * &qk1);
            let hi = &two * &qk / &qk1;
            let ak = &orbit.alphas[k];
            prop_assert!(&lo < ak && ak < &hi);
            let inv_a = BigRational::new(BigInt::one(), BigInt::from(terms[k]));
            prop_assert!(lo < inv_a && inv_a < hi);
            // 𝒢(α_k) < 2q_{k+1}/q_{k+2}
            prop_assert!(gauss(ak) < &two * &qk1 / &qk2);
            if k >= 1 {
                let qkm1 = int(&r.q(k - 1).unwrap());
                let ratio = &two * &qkm1 * &qk / &qk1;
                if ratio < BigRational::one() {
                    prop_assert!(gauss(&orbit.betas[k - 1]) < ratio);
                }
                // 1/β_{k−1} − q_k = q_{k−1} α_k
                prop_assert_eq!(orbit.betas[k - 1].recip() - &qk, &qkm1 * ak);
            }
        }
    }

    #[test]
    fn sign_identity(terms in quotients()) {
        let r = RotationNumber::from_quotients(PartialQuotients::from_u64(&terms).unwrap());
        let alpha = r.representative();
        for k in 0..terms.len() {
            let c = r.convergent(k).unwrap();
            let signed = (int(&c.q) * &alpha - int(&c.p)) * if k % 2 == 0 { BigRational::one() } else { -BigRational::one() };
            prop_assert!(signed.is_positive());
            prop_assert_eq!(signed, r.beta(k).unwrap());
        }
    }

    #[test]
    fn bracket_contains_all_continuations(terms in prop::collection::vec(1u64..=100, 2..10), extra in prop::collection::vec(1u64..=100, 1..6)) {
        let r = RotationNumber::from_quotients(PartialQuotients::from_u64(&terms).unwrap());
        let (lo, hi) = r.bracket();
        let mut longer = terms.clone();
        longer.extend_from_slice(&extra);
        let v = oracle_value(&longer);
        prop_assert!(lo <= v && v <= hi);
    }

    #[test]
    fn synthesized_alpha_is_in_cp(c in 0u64..20, k in 1u32..3, n in prop::sample::select(vec![3usize, 5, 7]), prefix in prop::collection::vec(1u64..5, 0..2)) {
        let reg = GrowthRegistry::default();
        let p = reg.parse(&format!("power:{k},{c}")).unwrap();
        let prefix = PartialQuotients::from_u64(&prefix).unwrap();
        let r = synthesize_alpha(p.as_ref(), n, Some(&prefix), 3).unwrap();
        prop_assert!(check_cp_membership(&r, p.as_ref(), n).unwrap());
        prop_assert_eq!(&r.quotients().terms()[..prefix.len()], prefix.terms());
        let q_span = rat(&r.q(n + 2).unwrap(), &BigInt::one());
        prop_assert!(q_span.is_positive());
    }
}
