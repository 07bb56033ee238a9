use annulus_core::{mat, LiftPoint, SampleGrid};
use mapkit::compose;
use moser::{moser_flow, DensityField, Domain, MoserOptions};
use rayon::prelude::*;

use crate::conjugacy::ConjugacyResult;
use crate::{ClosureError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AreaOptions {
    /// Density nodes for `λ`.
    pub nx: usize,
    pub ny: usize,
    pub moser: MoserOptions,
    /// Grid for the final `|det D(h₁ ∘ h₂) − 1|`.
    pub check: SampleGrid,
}

impl Default for AreaOptions {
    fn default() -> Self {
        Self { nx: 128, ny: 33, moser: MoserOptions::default(), check: SampleGrid::new(128, 17) }
    }
}

/// `λ = det Dh₁` with `h₁ = h⁻¹`, `h₂` with `h₂^*(λ) = 1`, and `h₁ ∘ h₂` as the corrected conjugator.
pub fn area_correct(result: &ConjugacyResult, opts: &AreaOptions, tol: f64) -> Result<ConjugacyResult> {
    let c = &result.conjugator;
    // det Dh₁(w) = 1/det Dh(h₁(w)).
    let det_h1 = |w: LiftPoint| -> f64 { c.inverse(w).and_then(|p| c.forward(p)).map(|(_, d, _)| 1.0 / mat::det(&d)).unwrap_or(f64::NAN) };
    let nodes: Vec<LiftPoint> = (0..opts.ny)
        .flat_map(|j| (0..opts.nx).map(move |i| LiftPoint::new(i as f64 / opts.nx as f64, j as f64 / (opts.ny - 1) as f64)))
        .collect();
    let values: Vec<f64> = nodes.par_iter().map(|&w| det_h1(w)).collect();
    let min = values.iter().copied().fold(f64::INFINITY, |a, b| if b.is_nan() { f64::NAN } else { a.min(b) });
    if !(min > 0.0) {
        return Err(ClosureError::NegativeJacobian { min });
    }
    let lambda = DensityField::new(Domain::Annulus, opts.nx, opts.ny, values)?.normalized();
    let flow = moser_flow(&lambda, opts.moser)?;
    let h2 = flow.to_map();
    let corrected = compose(&result.h1, &h2);
    let deviation = opts
        .check
        .points()
        .par_iter()
        .map(|&x| {
            let (y, d2) = h2.apply_with_jacobian(x);
            (det_h1(y) * mat::det(&d2) - 1.0).abs()
        })
        .reduce(|| 0.0, |a, b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) });
    if !(deviation < tol) {
        return Err(ClosureError::AreaDeviation { deviation, tol });
    }
    let mut out = result.clone();
    out.h2 = Some(h2);
    out.corrected = Some(corrected);
    out.lambda = Some(lambda);
    out.area_deviation = Some(deviation);
    out.approximant = None;
    Ok(out)
}
