use annulus_core::{c0_distance, mat, IdentityMap, LiftPoint, MetricSample, SampleGrid};
use cf_arith::{gauss, rational_to_f64, RotationNumber};
use mapkit::AnnulusMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::bounds::{bound_A0, delta_min, epsilon0, epsilon1};
use crate::estimate::RotationEstimate;
use crate::report::CheckRecord;

/// Sampled `sup ‖Df‖` (operator norm of the chain-rule Jacobian).
pub fn derivative_norm(f: &AnnulusMap, grid: SampleGrid) -> MetricSample {
    MetricSample::over(&grid.points(), (grid.nx, grid.ny), |p| mat::op_norm(&f.jacobian(p)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisplacementStatus {
    /// The smallness preconditions fail, or `α` is not a valid irrational candidate.
    Inapplicable,
    Holds,
    Violated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisplacementReport {
    pub alpha: f64,
    pub gauss_alpha: f64,
    /// Derivative bound used; at least `1 + 1e−6` so that `K > 1`.
    pub k: f64,
    pub inf_displacement: f64,
    pub argmin: LiftPoint,
    pub alpha_small: bool,
    pub gauss_small: bool,
    pub delta: f64,
    pub status: DisplacementStatus,
}

impl DisplacementReport {
    pub fn record(&self) -> CheckRecord {
        let mut r = CheckRecord::at_least(
            "min_displacement",
            json!({ "alpha": self.alpha, "K": self.k, "alpha_small": self.alpha_small, "gauss_small": self.gauss_small }),
            self.inf_displacement,
            self.delta,
        );
        r.pass = self.status != DisplacementStatus::Violated;
        r
    }
}

/// Sampled `inf d(x, f(x))` against `δ(α, K⁻¹)`, with the smallness preconditions
/// `α < ε₀(K⁻¹)` and `𝒢(α) < ε₁(α, K⁻¹)` evaluated at the sampled `K`.
pub fn verify_displacement(f: &AnnulusMap, alpha: &RotationNumber, k: Option<f64>, grid: SampleGrid) -> DisplacementReport {
    let k = k.unwrap_or_else(|| derivative_norm(f, grid).sup).max(1.0 + 1e-6);
    let a = alpha.to_f64();
    let ga = rational_to_f64(&gauss(&alpha.representative()));
    let pts = grid.points();
    let (inf, argmin) = pts
        .par_iter()
        .map(|&p| (f.apply(p).annulus_dist(p), p))
        .reduce(|| (f64::INFINITY, LiftPoint::default()), |a, b| if b.0 < a.0 { b } else { a });
    let valid = a > 0.0 && a < 1.0 && alpha.depth() >= 2;
    let alpha_small = valid && a < epsilon0(1.0 / k);
    let gauss_small = valid && epsilon1(a, 1.0 / k).is_ok_and(|e| ga < e);
    let delta = if valid { delta_min(a, 1.0 / k).unwrap_or(0.0) } else { 0.0 };
    let status = if !(alpha_small && gauss_small) {
        DisplacementStatus::Inapplicable
    } else if inf >= delta {
        DisplacementStatus::Holds
    } else {
        DisplacementStatus::Violated
    };
    DisplacementReport { alpha: a, gauss_alpha: ga, k, inf_displacement: inf, argmin, alpha_small, gauss_small, delta, status }
}

/// Sampled `d_{C⁰}(f, Id) < (1 + 2‖Df‖)·‖ρ̂‖^{1/2}`.
pub fn theorem_a0_check(f: &AnnulusMap, rho: &RotationEstimate, grid: SampleGrid) -> CheckRecord {
    let d = c0_distance(f, &IdentityMap, grid).sup;
    let k = derivative_norm(f, grid).sup.max(1.0);
    let s = rho.circle_norm();
    let bound = bound_A0(s, k).unwrap_or(f64::NAN);
    CheckRecord::below("c0_vs_A0", json!({ "rho": rho.value, "K": k, "grid": [grid.nx, grid.ny] }), d, bound)
}
