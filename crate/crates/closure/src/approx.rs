use annulus_core::{c0_distance, diffr_distance, MetricSample, SampleGrid, FD_STEP};
use cf_arith::{rational_to_f64, BigInt, BigRational, RotationNumber};
use mapkit::{compose, AnnulusMap};
use num_traits::Signed;
use serde_json::{json, Value};

use crate::conjugacy::ConjugacyResult;
use crate::periodic::ClosureResult;
use crate::Result;

/// Distances of the approximant `H R_α H⁻¹` and the exact rotation-parameter gap.
#[derive(Debug, Clone)]
pub struct ApproximantReport {
    pub map: AnnulusMap,
    /// `|α − p_{n+1}/q_{n+1}|` at the representative of `α`.
    pub gap: BigRational,
    /// `β_{n+1}/q_{n+1}`.
    pub gap_formula: BigRational,
    /// `1/(q_{n+1} q_{n+2})`, when `q_{n+2}` is known.
    pub gap_bound: Option<BigRational>,
    pub c0_to_f: MetricSample,
    /// Sampled `Diff^{order}` distance to `f`; `order = 0` means only the C⁰ term.
    pub diffr_to_f: f64,
    pub order: usize,
    /// `c0(H R_α H⁻¹, H s H⁻¹)`.
    pub c0_to_periodic: MetricSample,
    /// `c0(H s H⁻¹, g)`.
    pub periodic_to_g: MetricSample,
}

impl ApproximantReport {
    pub fn gap_identity_holds(&self) -> bool {
        self.gap == self.gap_formula && self.gap_bound.as_ref().map_or(true, |b| self.gap <= *b)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "gap": rational_to_f64(&self.gap),
            "gap_exact": self.gap.to_string(),
            "gap_bound": self.gap_bound.as_ref().map(rational_to_f64),
            "gap_identity": self.gap_identity_holds(),
            "c0_to_f": self.c0_to_f.sup,
            "diffr_to_f": self.diffr_to_f,
            "order": self.order,
            "c0_to_periodic": self.c0_to_periodic.sup,
            "periodic_to_g": self.periodic_to_g.sup,
        })
    }
}

/// Measures `H R_α H⁻¹` with the current conjugator of `result` against `f` at order `order`.
pub fn build_approximant(
    result: &ConjugacyResult,
    closure: &ClosureResult,
    alpha: &RotationNumber,
    f: &AnnulusMap,
    order: usize,
    grid: SampleGrid,
) -> Result<ApproximantReport> {
    let comb = closure.data.combinatorics();
    let n = comb.n;
    let rep = alpha.representative();
    let gap = (&rep - &result.s_exact).abs();
    let gap_formula = alpha.beta(n + 1)? / BigRational::from_integer(BigInt::from(comb.q_next));
    let gap_bound = alpha.q(n + 2).ok().map(|q2| BigRational::new(BigInt::from(1), BigInt::from(comb.q_next) * q2));

    let conj = result.approximant_conjugator();
    let inv = conj.inverse();
    let map = compose(conj, &compose(&AnnulusMap::rotation_exact(&rep), &inv));
    let periodic = compose(conj, &compose(&result.s, &inv));
    let c0_to_f = c0_distance(&map, f, grid);
    let diffr_to_f = if order == 0 { c0_to_f.sup } else { diffr_distance(&map, f, order, grid, FD_STEP)? };
    Ok(ApproximantReport {
        c0_to_periodic: c0_distance(&map, &periodic, grid),
        periodic_to_g: c0_distance(&periodic, &closure.g, grid),
        map,
        gap,
        gap_formula,
        gap_bound,
        c0_to_f,
        diffr_to_f,
        order,
    })
}
