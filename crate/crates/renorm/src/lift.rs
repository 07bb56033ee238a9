use cf_arith::{BigInt, RotationNumber};
use dynamics::rotation_number_estimate;
use mapkit::{iterate, AnnulusMap, LiftPoint};

use crate::{RenormError, Result};

const ESTIMATE_ITERATES: u64 = 4096;
const ESTIMATE_SAMPLES: usize = 16;

/// What is known about `α = ρ(F₁)`. `Exact` means the rational representative itself.
#[derive(Debug, Clone)]
pub enum AlphaSource {
    Exact(RotationNumber),
    Estimate { value: f64, error: f64 },
}

impl AlphaSource {
    pub fn to_f64(&self) -> f64 {
        match self {
            AlphaSource::Exact(rn) => rn.to_f64(),
            AlphaSource::Estimate { value, .. } => *value,
        }
    }

    /// `⌊nα⌋`, provided it is determined by what is known.
    pub fn floor_mul(&self, n: i64) -> Result<i64> {
        match self {
            AlphaSource::Exact(rn) => {
                let f = rn.floor_mul(&BigInt::from(n));
                i64::try_from(f).map_err(|_| RenormError::PrecisionExhausted(format!("⌊{n}α⌋ overflows")))
            }
            AlphaSource::Estimate { value, error } => {
                let x = *value * n as f64;
                let e = *error * n.unsigned_abs() as f64;
                if (x - e).floor() != (x + e).floor() {
                    return Err(RenormError::RotationRange { estimate: x, error: e });
                }
                Ok(x.floor() as i64)
            }
        }
    }
}

/// The lift `F^{a,b} = T^b ∘ F₁^a`, where `F₁` is the lift of `f` with `ρ(F₁) ∈ (0,1)`.
#[derive(Debug, Clone)]
pub struct LiftPower {
    base: AnnulusMap,
    alpha: AlphaSource,
    a: i64,
    b: i64,
    map: AnnulusMap,
}

fn assemble(base: AnnulusMap, alpha: AlphaSource, a: i64, b: i64) -> LiftPower {
    let map = iterate(&base, a).shifted(b);
    LiftPower { base, alpha, a, b, map }
}

/// Normalises the lift of `f` with the rotation-number estimator.
pub fn lift_power(f: &AnnulusMap, a: i64, b: i64) -> Result<LiftPower> {
    let (base, value, error) = match f.translation() {
        Some(t) => {
            let k = t.floor();
            (f.shifted(-(k as i64)), t - k, 0.0)
        }
        None => {
            let est = rotation_number_estimate(f, ESTIMATE_ITERATES, ESTIMATE_SAMPLES);
            let k = est.lift_value.floor();
            (f.shifted(-(k as i64)), est.lift_value - k, est.error_bound)
        }
    };
    if value - error <= 0.0 || value + error >= 1.0 {
        return Err(RenormError::RotationRange { estimate: value, error });
    }
    Ok(assemble(base, AlphaSource::Estimate { value, error }, a, b))
}

/// Normalises the lift of `f` against a known rotation number.
pub fn lift_power_exact(f: &AnnulusMap, alpha: &RotationNumber, a: i64, b: i64) -> Result<LiftPower> {
    let target = alpha.to_f64();
    if !(target > 0.0 && target < 1.0) {
        return Err(RenormError::RotationRange { estimate: target, error: 0.0 });
    }
    let (drift, error) = match f.translation() {
        Some(t) => (t, 0.0),
        None => {
            let est = rotation_number_estimate(f, ESTIMATE_ITERATES, ESTIMATE_SAMPLES);
            (est.lift_value, est.error_bound)
        }
    };
    let k = (drift - target).round();
    if (drift - k - target).abs() > error + 1e-9 {
        return Err(RenormError::LiftMismatch { drift: drift - k, expected: target });
    }
    Ok(assemble(f.shifted(-(k as i64)), AlphaSource::Exact(alpha.clone()), a, b))
}

impl LiftPower {
    /// `F₁`.
    pub fn base(&self) -> &AnnulusMap {
        &self.base
    }

    pub fn alpha(&self) -> &AlphaSource {
        &self.alpha
    }

    pub fn a(&self) -> i64 {
        self.a
    }

    pub fn b(&self) -> i64 {
        self.b
    }

    /// `T^b ∘ F₁^a` as a map of the cover.
    pub fn map(&self) -> &AnnulusMap {
        &self.map
    }

    pub fn apply(&self, p: LiftPoint) -> LiftPoint {
        self.map.apply(p)
    }

    /// `F^{a',b'}` over the same `F₁`.
    pub fn with_powers(&self, a: i64, b: i64) -> LiftPower {
        assemble(self.base.clone(), self.alpha.clone(), a, b)
    }

    /// `F_n = F^{n, −⌊nα⌋}`, the lift of `f^n` with rotation number in `(0,1)`.
    pub fn f_n(&self, n: i64) -> Result<LiftPower> {
        let m = self.alpha.floor_mul(n)?;
        Ok(self.with_powers(n, -m))
    }

    /// `ρ(F^{a,b}) = aα + b`.
    pub fn rotation_number(&self) -> f64 {
        self.a as f64 * self.alpha.to_f64() + self.b as f64
    }
}
