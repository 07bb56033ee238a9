//! Renormalization of annulus maps: the lift algebra `F^{a,b} = T^b F₁^a`,
//! conjugators `H` with `F_n H = H T` built from admissible charts, the
//! renormalized maps `(HJ)⁻¹ F^{a,b} (HJ)`, their rotation numbers, and the
//! push-forward of good curves through `HJ`.

mod context;
mod lift;
mod push;
mod renormalize;
mod rho;

pub use context::{build_h, build_h_with, RenormContext};
pub use lift::{lift_power, lift_power_exact, AlphaSource, LiftPower};
pub use push::push_forward_good_curve;
pub use renormalize::renormalize;
pub use rho::{renorm_rho, RenormRho};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RenormError {
    #[error("rotation number of the lift is not separated from the integers (estimate {estimate}, error {error})")]
    RotationRange { estimate: f64, error: f64 },
    #[error("lift does not match the rotation number: drift {drift}, expected {expected}")]
    LiftMismatch { drift: f64, expected: f64 },
    #[error("degenerate parameters: a⌊nα⌋ + bn = 0 for n = {n}, a = {a}, b = {b}")]
    Degenerate { n: i64, a: i64, b: i64 },
    #[error("{{nα}} = 0 for n = {0}")]
    FracZero(i64),
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("chart map differs from F_n by {residual}")]
    ChartMismatch { residual: f64 },
    #[error("u = {u} outside the extension window of size {window}")]
    WindowExceeded { u: f64, window: i64 },
    #[error(transparent)]
    Chart(brouwer::BrouwerError),
    #[error(transparent)]
    Arith(#[from] cf_arith::CfError),
}

impl From<brouwer::BrouwerError> for RenormError {
    fn from(e: brouwer::BrouwerError) -> Self {
        match e {
            brouwer::BrouwerError::WindowExceeded { u, window } => RenormError::WindowExceeded { u, window },
            e => RenormError::Chart(e),
        }
    }
}

pub type Result<T> = std::result::Result<T, RenormError>;
