use std::sync::Arc;

use annulus_core::{LiftPoint, Mat2};
use serde_json::{json, Value};

use crate::prim::{bad, Primitive};
use crate::Result;

/// Twist `(x, y) ↦ (x + c(y), y)` with polynomial profile `c(y) = Σ c_k y^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Twist {
    coeffs: Vec<f64>,
}

impl Twist {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    /// `(x + c·y, y)`.
    pub fn linear(c: f64) -> Self {
        Self::new(vec![0.0, c])
    }

    pub fn profile(&self, y: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * y + c)
    }

    pub fn profile_derivative(&self, y: f64) -> f64 {
        self.coeffs.iter().enumerate().skip(1).rev().fold(0.0, |acc, (k, c)| acc * y + k as f64 * c)
    }
}

impl Primitive for Twist {
    fn tag(&self) -> &'static str {
        "twist"
    }
    fn apply(&self, p: LiftPoint) -> LiftPoint {
        LiftPoint::new(p.x + self.profile(p.y), p.y)
    }
    fn apply_inverse(&self, p: LiftPoint) -> LiftPoint {
        LiftPoint::new(p.x - self.profile(p.y), p.y)
    }
    fn jacobian(&self, p: LiftPoint) -> Mat2 {
        [[1.0, self.profile_derivative(p.y)], [0.0, 1.0]]
    }
    fn closed_form(&self) -> bool {
        true
    }
    fn area_preserving(&self) -> bool {
        true
    }
    fn params(&self) -> Option<Value> {
        Some(json!({ "coeffs": self.coeffs }))
    }
}

pub(crate) fn from_params(v: &Value) -> Result<Arc<dyn Primitive>> {
    let arr = v.get("coeffs").and_then(Value::as_array).ok_or_else(|| bad("twist", "missing `coeffs` array"))?;
    let coeffs = arr.iter().map(|c| c.as_f64().ok_or_else(|| bad("twist", "coefficients must be numbers"))).collect::<Result<Vec<_>>>()?;
    Ok(Arc::new(Twist::new(coeffs)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horner() {
        let t = Twist::new(vec![1.0, -2.0, 3.0]);
        assert_eq!(t.profile(2.0), 1.0 - 4.0 + 12.0);
        assert_eq!(t.profile_derivative(2.0), -2.0 + 12.0);
        assert_eq!(Twist::new(vec![]).profile(0.3), 0.0);
    }
}
