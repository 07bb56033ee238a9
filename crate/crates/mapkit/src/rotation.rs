use std::sync::Arc;

use annulus_core::{mat, LiftPoint, Mat2};
use cf_arith::{rational_to_f64, BigInt, BigRational};
use serde_json::{json, Value};

use crate::prim::{bad, Primitive};
use crate::Result;

/// Rigid rotation `R_t(x,y) = (x+t, y)` with `t ∈ [0,1)`.
///
/// The optional exact value lets iterates and sums of rotations be folded
/// without accumulating rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct Rotation {
    t: f64,
    exact: Option<BigRational>,
}

impl Rotation {
    /// Splits `t` into `(Rotation({t}), ⌊t⌋)`.
    pub fn new(t: f64) -> (Self, i64) {
        let k = t.floor();
        let mut f = t - k;
        if f >= 1.0 {
            f = 0.0;
        }
        (Self { t: f, exact: None }, k as i64)
    }

    pub fn exact(t: &BigRational) -> (Self, i64) {
        let k = t.floor();
        let f = t - &k;
        let ki: i64 = k.to_integer().try_into().expect("rotation lift offset fits in i64");
        (Self { t: rational_to_f64(&f), exact: Some(f) }, ki)
    }

    pub fn amount(&self) -> f64 {
        self.t
    }

    pub fn exact_amount(&self) -> Option<&BigRational> {
        self.exact.as_ref()
    }

    /// `n`-fold iterate, split as in [`Rotation::new`].
    pub fn times(&self, n: i64) -> (Self, i64) {
        match &self.exact {
            Some(q) => Self::exact(&(q * BigRational::from_integer(BigInt::from(n)))),
            None => {
                let prod = self.t * n as f64;
                Self::new(prod)
            }
        }
    }

    pub fn plus(&self, o: &Rotation) -> (Self, i64) {
        match (&self.exact, &o.exact) {
            (Some(a), Some(b)) => Self::exact(&(a + b)),
            _ => Self::new(self.t + o.t),
        }
    }
}

impl Primitive for Rotation {
    fn tag(&self) -> &'static str {
        "rotation"
    }
    fn apply(&self, p: LiftPoint) -> LiftPoint {
        LiftPoint::new(p.x + self.t, p.y)
    }
    fn apply_inverse(&self, p: LiftPoint) -> LiftPoint {
        LiftPoint::new(p.x - self.t, p.y)
    }
    fn jacobian(&self, _p: LiftPoint) -> Mat2 {
        mat::IDENTITY
    }
    fn closed_form(&self) -> bool {
        true
    }
    fn area_preserving(&self) -> bool {
        true
    }
    fn params(&self) -> Option<Value> {
        Some(match &self.exact {
            Some(q) => json!({ "t": q.to_string() }),
            None => json!({ "t": self.t }),
        })
    }
    fn as_rotation(&self) -> Option<&Rotation> {
        Some(self)
    }
}

pub(crate) fn from_params(v: &Value) -> Result<Arc<dyn Primitive>> {
    let t = v.get("t").ok_or_else(|| bad("rotation", "missing `t`"))?;
    let (r, k) = if let Some(s) = t.as_str() {
        let q: BigRational = s.parse().map_err(|_| bad("rotation", format!("bad rational {s:?}")))?;
        Rotation::exact(&q)
    } else {
        Rotation::new(t.as_f64().ok_or_else(|| bad("rotation", "`t` must be a number or \"p/q\""))?)
    };
    if k != 0 {
        return Err(bad("rotation", "`t` must lie in [0,1); put the integer part in the lift offset"));
    }
    Ok(Arc::new(r))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitting() {
        let (r, k) = Rotation::new(2.25);
        assert_eq!((r.amount(), k), (0.25, 2));
        let (r, k) = Rotation::new(-0.1);
        assert!((r.amount() - 0.9).abs() < 1e-15);
        assert_eq!(k, -1);
    }

    #[test]
    fn exact_iterates_close_up() {
        let q = BigRational::new(3.into(), 7.into());
        let (r, _) = Rotation::exact(&q);
        let (r7, k) = r.times(7);
        assert_eq!(r7.amount(), 0.0);
        assert_eq!(k, 3);
        let (r10, k) = r.times(-10);
        assert_eq!(r10.exact_amount().unwrap(), &BigRational::new(5.into(), 7.into()));
        assert_eq!(k, -5);
    }
}
