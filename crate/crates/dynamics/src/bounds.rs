use std::collections::BTreeMap;
use std::sync::Arc;

use crate::{DynError, Result};

fn domain(name: &'static str, msg: impl Into<String>) -> DynError {
    DynError::Domain { name, msg: msg.into() }
}

/// `A_0(s, K) = (1 + 2K)·√s` for `s ∈ [0, 1/2]`, `K ≥ 1`.
#[allow(non_snake_case)]
pub fn bound_A0(s: f64, k: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&s) {
        return Err(domain("bound_A0", format!("s = {s} not in [0, 1/2]")));
    }
    if !(k >= 1.0) {
        return Err(domain("bound_A0", format!("K = {k} < 1")));
    }
    Ok((1.0 + 2.0 * k) * s.sqrt())
}

/// `A_r(s, K) = c_r · s^{1/(2(r+1))} · (1 + 2K)`.
#[allow(non_snake_case)]
pub fn bound_Ar(r: usize, c_r: f64, s: f64, k: f64) -> Result<f64> {
    if r == 0 {
        return Err(domain("bound_Ar", "r must be >= 1"));
    }
    if !(0.0..=0.5).contains(&s) || !(k >= 1.0) {
        return Err(domain("bound_Ar", format!("(s, K) = ({s}, {k})")));
    }
    Ok(c_r * s.powf(1.0 / (2.0 * (r as f64 + 1.0))) * (1.0 + 2.0 * k))
}

/// Largest `s` with `A_0(s, K) ≤ 1/2`, where `K = 1/k_inv`.
pub fn epsilon0(k_inv: f64) -> f64 {
    let k = 1.0 / k_inv;
    let s = 1.0 / (2.0 * (1.0 + 2.0 * k));
    (s * s).min(0.5f64.next_down())
}

fn check_tk(name: &'static str, t: f64, k_inv: f64) -> Result<f64> {
    if !(t > 0.0 && t < 1.0) {
        return Err(domain(name, format!("t = {t} not in (0, 1)")));
    }
    let k = 1.0 / k_inv;
    if !(k > 1.0) || !k.is_finite() {
        return Err(domain(name, format!("K = {k} must exceed 1")));
    }
    Ok(k)
}

/// `min( sup{s : A_0(s, K^{1/t}) ≤ 1/4}, ε₀(K^{−1/t})/2 )`.
pub fn epsilon1(t: f64, k_inv: f64) -> Result<f64> {
    let k = check_tk("epsilon1", t, k_inv)?;
    let kt = k.powf(1.0 / t);
    let first = (1.0 / (4.0 * (1.0 + 2.0 * kt))).powi(2);
    Ok(first.min(epsilon0(1.0 / kt) / 2.0))
}

/// `δ(t, K⁻¹) = ½ (K − 1)/(K^{1/t} − 1)`.
pub fn delta_min(t: f64, k_inv: f64) -> Result<f64> {
    let k = check_tk("delta_min", t, k_inv)?;
    let denom = k.powf(1.0 / t) - 1.0;
    Ok(if denom.is_infinite() { 0.0 } else { 0.5 * (k - 1.0) / denom })
}

/// `min( sup{s < 1/2 : A_0(s, K^q) ≤ 1/(2 K^q C_1(1/α, K))}, ε₁(α, K⁻¹) )` with `q = ⌊1/α⌋`.
pub fn epsilon2(alpha: f64, k_inv: f64, c1: &dyn Fn(f64, f64) -> f64) -> Result<f64> {
    let k = check_tk("epsilon2", alpha, k_inv)?;
    let kq = k.powf((1.0 / alpha).floor());
    let c = c1(1.0 / alpha, k);
    if !(c > 0.0) {
        return Err(domain("epsilon2", format!("C_1 = {c} must be positive")));
    }
    let first = (1.0 / (2.0 * kq * c * (1.0 + 2.0 * kq))).powi(2).min(0.5f64.next_down());
    Ok(first.min(epsilon1(alpha, k_inv)?))
}

type C1Fn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Configured constants for the bound functions.
///
/// The interpolation constants `c_r` and the function `C_1` entering `ε₂` are
/// existence-only quantities; the defaults (`c_r = 1` for `r ≤ 4`, `C_1 ≡ 1`)
/// are configuration, not derived values.
#[derive(Clone)]
pub struct BoundFunctions {
    pub c_r: BTreeMap<usize, f64>,
    pub c1: C1Fn,
}

impl std::fmt::Debug for BoundFunctions {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BoundFunctions").field("c_r", &self.c_r).finish_non_exhaustive()
    }
}

impl Default for BoundFunctions {
    fn default() -> Self {
        Self { c_r: (1..=4).map(|r| (r, 1.0)).collect(), c1: Arc::new(|_, _| 1.0) }
    }
}

impl BoundFunctions {
    pub fn unconfigured() -> Self {
        Self { c_r: BTreeMap::new(), c1: Arc::new(|_, _| 1.0) }
    }

    pub fn with_c(mut self, r: usize, c: f64) -> Self {
        self.c_r.insert(r, c);
        self
    }

    #[allow(non_snake_case)]
    pub fn A0(&self, s: f64, k: f64) -> Result<f64> {
        bound_A0(s, k)
    }

    #[allow(non_snake_case)]
    pub fn Ar(&self, r: usize, s: f64, k: f64) -> Result<f64> {
        let c = *self.c_r.get(&r).ok_or(DynError::Unconfigured(r))?;
        bound_Ar(r, c, s, k)
    }

    pub fn epsilon0(&self, k_inv: f64) -> f64 {
        epsilon0(k_inv)
    }

    pub fn epsilon1(&self, t: f64, k_inv: f64) -> Result<f64> {
        epsilon1(t, k_inv)
    }

    pub fn epsilon2(&self, alpha: f64, k_inv: f64) -> Result<f64> {
        epsilon2(alpha, k_inv, self.c1.as_ref())
    }

    pub fn delta(&self, t: f64, k_inv: f64) -> Result<f64> {
        delta_min(t, k_inv)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn a0_values() {
        assert_eq!(bound_A0(0.25, 1.0).unwrap(), 1.5);
        assert_eq!(bound_A0(0.0, 3.0).unwrap(), 0.0);
        assert!(bound_A0(0.6, 1.0).is_err());
        assert!(bound_A0(0.1, 0.5).is_err());
    }

    #[test]
    fn ar_values() {
        assert_eq!(bound_Ar(1, 1.0, 1.0 / 16.0, 1.0).unwrap(), 1.5);
        assert!(matches!(BoundFunctions::unconfigured().Ar(1, 0.1, 1.0), Err(DynError::Unconfigured(1))));
        assert_eq!(BoundFunctions::default().Ar(1, 1.0 / 16.0, 1.0).unwrap(), 1.5);
        assert!(bound_Ar(2, 1.0, 1e-300, 1.0).unwrap() < 1e-40);
    }

    #[test]
    fn epsilon0_values() {
        assert!((epsilon0(1.0) - 1.0 / 36.0).abs() < 1e-17);
        assert!(epsilon0(1e-12) < 1e-24);
        assert!(epsilon0(1e12) < 0.5);
        let s = epsilon0(0.25);
        assert!((bound_A0(s, 4.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn epsilon1_values() {
        let e = epsilon1(0.5, 0.5).unwrap();
        let expect = (1.0f64 / 36.0).powi(2).min((1.0f64 / 18.0).powi(2) / 2.0);
        assert!((e - expect).abs() < 1e-18);
        assert!((e - 1.0 / 1296.0).abs() < 1e-18);
        assert!(e < epsilon0(0.25));
        assert!(epsilon1(0.5, 1e-9).unwrap() < 1e-30);
        assert!(epsilon1(0.5, 1.0).is_err());
        assert!(epsilon1(1.0, 0.5).is_err());
    }

    #[test]
    fn delta_values() {
        assert!((delta_min(0.5, 0.5).unwrap() - 1.0 / 6.0).abs() < 1e-16);
        assert!((delta_min(1.0 - 1e-9, 0.5).unwrap() - 0.5).abs() < 1e-8);
        assert!(delta_min(1e-3, 0.5).unwrap() < 1e-300);
        assert_eq!(delta_min(1e-4, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn epsilon2_below_epsilon1() {
        let b = BoundFunctions::default();
        for &(a, k) in &[(0.1, 1.5), (0.3, 1.1), (0.05, 1.01)] {
            assert!(b.epsilon2(a, 1.0 / k).unwrap() <= b.epsilon1(a, 1.0 / k).unwrap());
        }
    }
}
