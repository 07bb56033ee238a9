//! Volume-form correction on the annulus and the unit square.
//!
//! Given a positive density `ρ` of unit mean, [`moser_flow`] builds the time-one
//! map `h₂` of `v_t = −w/((1−t) + tρ)` with `div w = ρ − 1`, so that
//! `ρ(h₂(x))·det Dh₂(x) = 1`.

mod density;
mod flow;
mod flux;
mod hermite;
mod solver;
mod spectral;

pub use density::{DensityField, Domain};
pub use flow::{moser_flow, moser_flow_with, pullback_residual, MoserFlow, MoserOptions};
pub use flux::{CompactFluxSolver, FluxField};
pub use hermite::HermiteField;
pub use solver::{DivergenceSolver, FlowField, SolverRegistry};
pub use spectral::{solve_divergence, SpectralField, SpectralNeumannSolver};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MoserError {
    #[error("density is not strictly positive (min {min})")]
    NonPositive { min: f64 },
    #[error("density mean {mean} differs from 1")]
    BadMean { mean: f64 },
    #[error("divergence residual {residual} exceeds {tol}")]
    SolverResidual { residual: f64, tol: f64 },
    #[error("flow blew up at ({x}, {y})")]
    FlowBlowup { x: f64, y: f64 },
    #[error("pullback residual {residual} exceeds {tol}")]
    VerificationFailure { residual: f64, tol: f64 },
    #[error("malformed density grid: {0}")]
    Malformed(String),
    #[error("unknown divergence solver `{0}`")]
    UnknownSolver(String),
    #[error("solver `{solver}` does not support {what}")]
    Unsupported { solver: &'static str, what: String },
}

pub type Result<T> = std::result::Result<T, MoserError>;
