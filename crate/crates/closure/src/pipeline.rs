use std::fmt;

use annulus_core::SampleGrid;
use brouwer::{Chart, ChartOptions, Curve};
use cf_arith::RotationNumber;
use mapkit::AnnulusMap;
use serde_json::{json, Value};

use crate::approx::{build_approximant, ApproximantReport};
use crate::area::{area_correct, AreaOptions};
use crate::conjugacy::{build_conjugacy, ConjugacyResult};
use crate::periodic::{assemble_g, ClosureResult};
use crate::sigma::build_sigma_l;
use crate::tiling::{build_tiling_data_with, tile_chart};
use crate::{ClosureError, Sampling, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Tiling,
    Chart,
    Sigma,
    Assemble,
    Conjugacy,
    Approximant,
    Area,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Tiling => "tiling",
            Stage::Chart => "chart",
            Stage::Sigma => "sigma",
            Stage::Assemble => "assemble",
            Stage::Conjugacy => "conjugacy",
            Stage::Approximant => "approximant",
            Stage::Area => "area",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{stage} stage failed: {source}")]
pub struct StageError {
    pub stage: Stage,
    pub source: ClosureError,
}

trait AtStage<T> {
    fn at(self, stage: Stage) -> Result<T, StageError>;
}

impl<T, E: Into<ClosureError>> AtStage<T> for Result<T, E> {
    fn at(self, stage: Stage) -> Result<T, StageError> {
        self.map_err(|e| StageError { stage, source: e.into() })
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub tolerances: Tolerances,
    pub sampling: Sampling,
    pub chart: ChartOptions,
    /// Regularity `r`: the approximant is measured at order `r − 1`, after correction at `r − 2`.
    pub r: usize,
    pub approximant_grid: SampleGrid,
    /// Measure `Diff^r(σ, Id)`; the finite differences are costly on fine grids.
    pub sigma_smallness: bool,
    /// Run the Moser correction.
    pub area: Option<AreaOptions>,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            tolerances: Tolerances::default(),
            sampling: Sampling::default(),
            chart: ChartOptions::default(),
            r: 1,
            approximant_grid: SampleGrid::new(64, 9),
            sigma_smallness: false,
            area: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub alpha: RotationNumber,
    pub chart: Chart,
    pub closure: ClosureResult,
    pub conjugacy: ConjugacyResult,
    pub approximant: ApproximantReport,
    /// Re-measured with the area-corrected conjugator.
    pub corrected: Option<(ConjugacyResult, ApproximantReport)>,
}

impl PipelineRun {
    pub fn to_json(&self) -> Value {
        let terms: Vec<String> = self.alpha.quotients().terms().iter().map(|a| a.to_string()).collect();
        json!({
            "alpha": { "quotients": terms, "representative": self.alpha.representative().to_string(), "value": self.alpha.to_f64() },
            "tiling": self.closure.data.to_json(),
            "chart": self.chart.diagnostics().to_json(),
            "closure": self.closure.to_json(),
            "conjugacy": self.conjugacy.to_json(),
            "approximant": self.approximant.to_json(),
            "corrected": self.corrected.as_ref().map(|(c, a)| json!({ "conjugacy": c.to_json(), "approximant": a.to_json() })),
        })
    }
}

/// Tiling, chart, `σ_L`, `g`, `h`, the approximant and optionally the area correction, in order.
pub fn run_closure(
    f: &AnnulusMap,
    gamma: &Curve,
    alpha: &RotationNumber,
    n: usize,
    opts: &PipelineOptions,
) -> Result<PipelineRun, StageError> {
    let tol = &opts.tolerances;
    tol.validate().at(Stage::Tiling)?;
    let data = build_tiling_data_with(f, gamma, alpha, n, tol).at(Stage::Tiling)?;
    let chart = tile_chart(&data, &opts.chart).at(Stage::Chart)?;
    let dev = chart.diagnostics().jacobian_deviation;
    if !(dev < tol.chart) {
        return Err(StageError { stage: Stage::Chart, source: ClosureError::ChartMismatch { residual: dev } });
    }
    let sigma_l = build_sigma_l(&data, &chart, tol.injectivity).at(Stage::Sigma)?;
    let r = opts.sigma_smallness.then_some(opts.r.max(1));
    let closure = assemble_g(&data, &sigma_l, &opts.sampling, tol, r).at(Stage::Assemble)?;
    let conjugacy = build_conjugacy(&closure, &opts.sampling, tol).at(Stage::Conjugacy)?;
    if !(conjugacy.conjugacy.sup < tol.conjugacy) {
        let source = ClosureError::Evaluation(format!("conjugacy residual {} exceeds {}", conjugacy.conjugacy.sup, tol.conjugacy));
        return Err(StageError { stage: Stage::Conjugacy, source });
    }
    let approximant =
        build_approximant(&conjugacy, &closure, alpha, f, opts.r.saturating_sub(1), opts.approximant_grid).at(Stage::Approximant)?;
    let corrected = match &opts.area {
        Some(a) => {
            let c = area_correct(&conjugacy, a, tol.area).at(Stage::Area)?;
            let rep = build_approximant(&c, &closure, alpha, f, opts.r.saturating_sub(2), opts.approximant_grid).at(Stage::Area)?;
            Some((c, rep))
        }
        None => None,
    };
    Ok(PipelineRun { alpha: alpha.clone(), chart, closure, conjugacy, approximant, corrected })
}
