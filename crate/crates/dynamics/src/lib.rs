//! Rotation numbers, the explicit quantitative bound functions and
//! displacement diagnostics for annulus pseudo-rotation candidates.

mod bounds;
mod displacement;
mod estimate;
mod report;

pub use bounds::{bound_A0, bound_Ar, delta_min, epsilon0, epsilon1, epsilon2, BoundFunctions};
pub use displacement::{derivative_norm, theorem_a0_check, verify_displacement, DisplacementReport, DisplacementStatus};
pub use estimate::{default_samples, rotation_number_estimate, RotationEstimate};
pub use report::CheckRecord;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DynError {
    #[error("{name}: argument out of domain: {msg}")]
    Domain { name: &'static str, msg: String },
    #[error("constant c_{0} is not configured")]
    Unconfigured(usize),
}

pub type Result<T> = std::result::Result<T, DynError>;
