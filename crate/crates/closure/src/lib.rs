//! Closing a pseudo-rotation candidate into a periodic map and conjugating it to a rotation.
//!
//! The stages are [`build_tiling_data`], [`build_sigma_l`], [`assemble_g`],
//! [`build_conjugacy`], [`build_approximant`] and [`area_correct`];
//! [`run_closure`] chains them.

mod approx;
mod area;
mod conjugacy;
mod periodic;
mod pipeline;
mod sigma;
mod tiling;

pub use approx::{build_approximant, ApproximantReport};
pub use area::{area_correct, AreaOptions};
pub use conjugacy::{build_conjugacy, ConjugacyResult, Conjugator, SeamReport};
pub use periodic::{assemble_g, ClosureResult};
pub use pipeline::{run_closure, PipelineOptions, PipelineRun, Stage, StageError};
pub use sigma::{build_sigma_l, smoothstep, SigmaL, BLEND};
pub use tiling::{build_tiling_data, build_tiling_data_with, tile_chart, Combinatorics, Lifts, Location, TilingData};

use annulus_core::{LiftPoint, SampleGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Budget of the pipeline checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Chart Jacobian deviation.
    pub chart: f64,
    /// Curve separation.
    pub curve: f64,
    pub periodicity: f64,
    pub conjugacy: f64,
    /// Final `|det Dh − 1|`.
    pub area: f64,
    /// Largest sampled C¹ distance of `ψ` to the identity that the cutoff may absorb.
    pub injectivity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { chart: 1e-4, curve: 1e-7, periodicity: 1e-6, conjugacy: 1e-6, area: 1e-4, injectivity: 0.125 }
    }
}

impl Tolerances {
    /// Every residual budget multiplied by `s`; the injectivity budget is structural and kept.
    pub fn scaled(self, s: f64) -> Self {
        Self {
            chart: self.chart * s,
            curve: self.curve * s,
            periodicity: self.periodicity * s,
            conjugacy: self.conjugacy * s,
            area: self.area * s,
            injectivity: self.injectivity,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.chart, self.curve, self.periodicity, self.conjugacy, self.area, self.injectivity];
        if all.iter().all(|t| t.is_finite() && *t > 0.0) {
            Ok(())
        } else {
            Err(ClosureError::Config(format!("tolerances must be positive: {self:?}")))
        }
    }
}

/// Sample set for the residual checks: a grid, the curves of `Γ`, and seeded random points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Sampling {
    pub grid: SampleGrid,
    pub random: usize,
    pub seed: u64,
}

impl Default for Sampling {
    fn default() -> Self {
        Self { grid: SampleGrid::new(256, 33), random: 1000, seed: 0 }
    }
}

impl Sampling {
    pub fn points(&self) -> Vec<LiftPoint> {
        let mut pts = self.grid.points();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        pts.extend((0..self.random).map(|_| LiftPoint::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..=1.0))));
        pts
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClosureError {
    #[error("pipeline index n = {0} must be odd and positive")]
    BadIndex(usize),
    #[error("curve is not {q}-good: iterates {pair:?} meet (separation {separation})")]
    Disjointness { q: usize, pair: Option<(usize, usize)>, separation: f64 },
    #[error("curve ordering violated: {0}")]
    Ordering(String),
    #[error("γ* = f^q(γ) leaves the interior of Ω: {0}")]
    GammaStarEscape(String),
    #[error("tile areas sum to {sum}")]
    TilingArea { sum: f64 },
    #[error("chart was built for a different map (residual {residual})")]
    ChartMismatch { residual: f64 },
    #[error("γ′ = φ⁻¹(γ*) spans u ∈ [{min}, {max}], outside (3/4, 5/4)")]
    GammaPrimeOutOfBand { min: f64, max: f64 },
    #[error("ψ is {distance} from the identity in C¹, above the injectivity budget {budget}")]
    InjectivityBudget { distance: f64, budget: f64 },
    #[error("interpolated ψ̂ is not injective (det {min_det})")]
    NotInjective { min_det: f64 },
    #[error("σ_L and σ_R disagree by {residual} near γ*")]
    GluingMismatch { residual: f64 },
    #[error("periodicity residual {residual} exceeds {tol}")]
    Periodicity { residual: f64, tol: f64 },
    #[error("h₀ matching residual {residual} exceeds {tol}")]
    Matching { residual: f64, tol: f64 },
    #[error("point ({x}, {y}) could not be located in the tiling")]
    TileLocation { x: f64, y: f64 },
    #[error("arithmetic identity failed: {0}")]
    Identity(String),
    #[error("Jacobian of h has a non-positive sample ({min})")]
    NegativeJacobian { min: f64 },
    #[error("area deviation {deviation} exceeds {tol}")]
    AreaDeviation { deviation: f64, tol: f64 },
    #[error("evaluation failed: {0}")]
    Evaluation(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Chart(#[from] brouwer::BrouwerError),
    #[error(transparent)]
    Moser(#[from] moser::MoserError),
    #[error(transparent)]
    Arith(#[from] cf_arith::CfError),
    #[error(transparent)]
    Lift(#[from] renorm::RenormError),
    #[error(transparent)]
    Metric(#[from] annulus_core::AnnulusError),
}

pub type Result<T> = std::result::Result<T, ClosureError>;
