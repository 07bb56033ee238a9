use cf_arith::{rational_to_f64, BigInt, BigRational, RotationNumber};
use serde_json::{json, Value};

use crate::{RenormError, Result};

/// `{(−aα − b)/{nα}}` at the representative, with the range over the bracket.
#[derive(Debug, Clone, PartialEq)]
pub struct RenormRho {
    pub value: BigRational,
    /// Values at the two bracket endpoints, ordered.
    pub lo: BigRational,
    pub hi: BigRational,
}

impl RenormRho {
    pub fn to_f64(&self) -> f64 {
        rational_to_f64(&self.value)
    }

    pub fn width(&self) -> f64 {
        rational_to_f64(&(&self.hi - &self.lo))
    }

    pub fn to_json(&self) -> Value {
        json!({
            "value": self.to_f64(),
            "exact": self.value.to_string(),
            "lo": rational_to_f64(&self.lo),
            "hi": rational_to_f64(&self.hi),
        })
    }
}

fn int(k: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(k))
}

/// `(−aα − b)/(nα − m)`, not reduced.
fn raw(alpha: &BigRational, n: i64, m: &BigInt, a: i64, b: i64) -> Option<BigRational> {
    let den = int(n) * alpha - BigRational::from_integer(m.clone());
    if den <= int(0) {
        return None;
    }
    Some((-(int(a) * alpha) - int(b)) / den)
}

/// Renormalized rotation number for `(n, a, b)`, exact at the representative of `α`.
///
/// As a function of `α` the quotient is monotone on any interval where
/// `⌊nα⌋` is constant, so its range over the bracket is spanned by the endpoints.
pub fn renorm_rho(alpha: &RotationNumber, n: i64, a: i64, b: i64) -> Result<RenormRho> {
    if n < 1 {
        return Err(RenormError::PrecisionExhausted(format!("n = {n} must be positive")));
    }
    let rep = alpha.representative();
    let m = alpha.floor_mul(&BigInt::from(n));
    let x = raw(&rep, n, &m, a, b).ok_or(RenormError::FracZero(n))?;
    let floor = x.floor();
    let value = &x - &floor;
    let (blo, bhi) = alpha.bracket();
    let mut ends = Vec::with_capacity(2);
    for e in [&blo, &bhi] {
        let y = raw(e, n, &m, a, b).filter(|_| (int(n) * e).floor().to_integer() == m);
        match y {
            Some(y) if y.floor() == floor => ends.push(y - &floor),
            _ => {
                return Err(RenormError::PrecisionExhausted(format!(
                    "bracket of α does not fix ⌊{n}α⌋ and the integer part of the quotient"
                )))
            }
        }
    }
    let (lo, hi) = if ends[0] <= ends[1] { (ends[0].clone(), ends[1].clone()) } else { (ends[1].clone(), ends[0].clone()) };
    Ok(RenormRho { value, lo, hi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use cf_arith::{gauss, PartialQuotients};

    fn rn(q: &[u64]) -> RotationNumber {
        RotationNumber::from_quotients(PartialQuotients::from_u64(q).unwrap())
    }

    #[test]
    fn trivial_parameters() {
        let a = rn(&[3, 2, 5, 1, 7]);
        assert_eq!(renorm_rho(&a, 1, 1, 0).unwrap().value, int(0));
        // {1/α} = 𝒢(α).
        assert_eq!(renorm_rho(&a, 1, 0, -1).unwrap().value, gauss(&a.representative()));
    }

    #[test]
    fn convergent_parameters_give_the_gauss_tail() {
        let a = rn(&[2, 5, 3, 4, 1, 6, 2, 3]);
        for k in [1usize, 3, 5] {
            let n: i64 = a.q(k - 1).unwrap().try_into().unwrap();
            let q: i64 = a.q(k).unwrap().try_into().unwrap();
            let p: i64 = a.p(k).unwrap().try_into().unwrap();
            let r = renorm_rho(&a, n, q, -p).unwrap();
            assert_eq!(r.value, a.alpha(k), "k = {k}");
            assert!(r.lo <= r.value && r.value <= r.hi);
        }
    }

    #[test]
    fn ambiguous_bracket_is_reported() {
        // A one-term prefix leaves α anywhere in [1/3, 1/2].
        assert!(matches!(renorm_rho(&rn(&[2]), 3, 1, 0), Err(RenormError::PrecisionExhausted(_) | RenormError::FracZero(_))));
    }
}
