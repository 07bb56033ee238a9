use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::expand::{convergents, value_of, Convergent, PartialQuotients};
use crate::gauss::gauss;
use crate::{cf_expand, rational_to_f64, CfError, Result};

/// A rotation number known through a finite quotient prefix.
///
/// The exact representative is the prefix value `p_N / q_N`. Any irrational
/// continuation of the prefix lies in [`RotationNumber::bracket`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "PartialQuotients", into = "PartialQuotients")]
pub struct RotationNumber {
    pq: PartialQuotients,
    convergents: Vec<Convergent>,
    value: BigRational,
}

impl From<PartialQuotients> for RotationNumber {
    fn from(pq: PartialQuotients) -> Self {
        Self::from_quotients(pq)
    }
}

impl From<RotationNumber> for PartialQuotients {
    fn from(r: RotationNumber) -> Self {
        r.pq
    }
}

impl RotationNumber {
    pub fn from_quotients(pq: PartialQuotients) -> Self {
        let convergents = convergents(&pq, pq.len()).expect("full prefix is available");
        let value = value_of(&pq);
        Self { pq, convergents, value }
    }

    pub fn from_rational(x: &BigRational) -> Result<Self> {
        Ok(Self::from_quotients(cf_expand(x)?))
    }

    pub fn quotients(&self) -> &PartialQuotients {
        &self.pq
    }

    /// Number of stored quotients `N`.
    pub fn depth(&self) -> usize {
        self.pq.len()
    }

    pub fn convergent(&self, k: usize) -> Result<&Convergent> {
        self.convergents.get(k).ok_or(CfError::InsufficientTerms { needed: k, available: self.depth() })
    }

    pub fn convergents(&self) -> &[Convergent] {
        &self.convergents
    }

    pub fn p(&self, k: usize) -> Result<BigInt> {
        Ok(self.convergent(k)?.p.clone())
    }

    pub fn q(&self, k: usize) -> Result<BigInt> {
        Ok(self.convergent(k)?.q.clone())
    }

    /// The exact rational `p_N / q_N` standing in for the number.
    pub fn representative(&self) -> BigRational {
        self.value.clone()
    }

    pub fn to_f64(&self) -> f64 {
        rational_to_f64(&self.representative())
    }

    /// Closed interval containing every continuation `[0; a_1, …, a_N + t]`, `t ∈ [0,1]`.
    pub fn bracket(&self) -> (BigRational, BigRational) {
        let n = self.depth();
        let last = &self.convergents[n];
        if n == 0 {
            return (BigRational::zero(), BigRational::one());
        }
        let prev = &self.convergents[n - 1];
        let a = last.value();
        let b = BigRational::new(&last.p + &prev.p, &last.q + &prev.q);
        if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    }

    pub fn bracket_width(&self) -> BigRational {
        let (lo, hi) = self.bracket();
        hi - lo
    }

    /// `α_k = 𝒢^k(α)` for the representative, exactly.
    pub fn alpha(&self, k: usize) -> BigRational {
        let mut a = self.representative();
        for _ in 0..k {
            a = gauss(&a);
        }
        a
    }

    /// `β_k = |q_k α − p_k|` for the representative, exactly.
    pub fn beta(&self, k: usize) -> Result<BigRational> {
        let c = self.convergent(k)?;
        let d = BigRational::from_integer(c.q.clone()) * &self.value - BigRational::from_integer(c.p.clone());
        Ok(if d < BigRational::zero() { -d } else { d })
    }

    /// `{m α}` for the representative, exactly.
    pub fn frac_mul(&self, m: &BigInt) -> BigRational {
        (BigRational::from_integer(m.clone()) * self.representative()).fract_floor()
    }

    /// `⌊m α⌋` for the representative.
    pub fn floor_mul(&self, m: &BigInt) -> BigInt {
        (BigRational::from_integer(m.clone()) * self.representative()).floor().to_integer()
    }

    /// Copy with `a_k` replaced.
    pub fn with_quotient(&self, k: usize, value: num_bigint::BigUint) -> Result<Self> {
        let mut pq = self.pq.clone();
        pq.set(k, value)?;
        Ok(Self::from_quotients(pq))
    }
}

trait FractFloor {
    fn fract_floor(&self) -> BigRational;
}

impl FractFloor for BigRational {
    /// Fractional part in `[0,1)`, also for negative inputs.
    fn fract_floor(&self) -> BigRational {
        self - self.floor()
    }
}

/// `{x} ∈ [0,1)` for any exact rational.
#[cfg(test)]
fn frac(x: &BigRational) -> BigRational {
    x.fract_floor()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bracket_contains_representative_and_shrinks() {
        let mut prev_width: Option<BigRational> = None;
        for n in 1..12 {
            let r = RotationNumber::from_quotients(PartialQuotients::from_u64(&vec![2; n]).unwrap());
            let (lo, hi) = r.bracket();
            let v = r.representative();
            assert!(lo <= v && v <= hi);
            let w = r.bracket_width();
            let qn = BigRational::from_integer(r.q(n).unwrap());
            let qn1 = BigRational::from_integer(r.q(n).unwrap() + r.q(n - 1).unwrap());
            // Smallest possible q_{N+1} is q_N + q_{N-1} (next quotient 1).
            assert_eq!(w, (qn * qn1).recip());
            if let Some(pw) = prev_width {
                assert!(w < pw);
            }
            prev_width = Some(w);
        }
    }

    #[test]
    fn json_is_decimal_strings() {
        let r = RotationNumber::from_quotients(PartialQuotients::from_u64(&[1, 2, 3]).unwrap());
        let js = serde_json::to_string(&r).unwrap();
        assert_eq!(js, r#"["1","2","3"]"#);
        let back: RotationNumber = serde_json::from_str(&js).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn frac_of_negative() {
        let x = BigRational::new((-7).into(), 3.into());
        assert_eq!(frac(&x), BigRational::new(2.into(), 3.into()));
    }

    #[test]
    fn float_conversion_is_nearest() {
        let r = RotationNumber::from_rational(&BigRational::new(1.into(), 3.into())).unwrap();
        assert_eq!(r.to_f64(), 1.0 / 3.0);
        let tiny = BigRational::new(1.into(), num_traits::pow(BigInt::from(10), 30));
        assert!((rational_to_f64(&tiny) - 1e-30).abs() < 1e-45);
    }
}
