use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::expand::PartialQuotients;
use crate::growth::Growth;
use crate::rotation::RotationNumber;
use crate::{CfError, Result};

/// Membership of `α` in `𝒞_P(n)`: `q_n > P(q_{n−1})`, `q_{n+1} > P(q_n)`, `q_{n+2} > P(q_{n+1})`.
pub fn check_cp_membership(rn: &RotationNumber, p: &dyn Growth, n: usize) -> Result<bool> {
    if n < 3 || n % 2 == 0 {
        return Err(CfError::Domain(format!("index n = {n} must be odd and >= 3")));
    }
    if rn.depth() < n + 2 {
        return Err(CfError::InsufficientTerms { needed: n + 2, available: rn.depth() });
    }
    for k in n..=n + 2 {
        let qk = BigRational::from_integer(rn.q(k)?);
        if qk <= p.eval(&rn.q(k - 1)?) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Smallest `a ≥ 1` with `q_{k−2} + a·q_{k−1} > bound`.
fn minimal_quotient(q_km2: &BigInt, q_km1: &BigInt, bound: &BigRational) -> BigUint {
    let need = bound - BigRational::from_integer(q_km2.clone());
    let a = if need < BigRational::zero() {
        BigInt::one()
    } else {
        (need / BigRational::from_integer(q_km1.clone())).floor().to_integer() + BigInt::one()
    };
    a.max(BigInt::one()).to_biguint().expect("positive")
}

/// Build `α` whose quotients extend `prefix`, with every free quotient up to
/// `a_{n+2}` chosen minimally so that `q_k > P(q_{k−1})`, followed by `tail`
/// quotients equal to 1.
pub fn synthesize_alpha(p: &dyn Growth, n: usize, prefix: Option<&PartialQuotients>, tail: usize) -> Result<RotationNumber> {
    if n < 3 || n % 2 == 0 {
        return Err(CfError::Domain(format!("index n = {n} must be odd and >= 3")));
    }
    let mut pq = prefix.cloned().unwrap_or_default();
    if pq.len() > n - 1 {
        return Err(CfError::Domain(format!("prefix has {} terms; at most n - 1 = {} allowed", pq.len(), n - 1)));
    }
    // q_{-1} = 0, q_0 = 1.
    let mut qs: Vec<BigInt> = vec![BigInt::zero(), BigInt::one()];
    for a in pq.terms() {
        let k = qs.len();
        let next = &qs[k - 2] + BigInt::from(a.clone()) * &qs[k - 1];
        qs.push(next);
    }
    while pq.len() < n + 2 {
        let k = qs.len();
        let bound = p.eval(&qs[k - 1]);
        let a = minimal_quotient(&qs[k - 2], &qs[k - 1], &bound);
        let next = &qs[k - 2] + BigInt::from(a.clone()) * &qs[k - 1];
        qs.push(next);
        pq.push(a)?;
    }
    for _ in 0..tail {
        pq.push(BigUint::one())?;
    }
    Ok(RotationNumber::from_quotients(pq))
}
