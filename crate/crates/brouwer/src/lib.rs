//! Boundary-to-boundary curves on the annulus, their ordering and `Q`-goodness,
//! Brouwer-curve search, and constant-Jacobian coordinates on fundamental regions.

mod chart;
mod curve;
mod geom;
mod good;
mod order;
mod search;

pub use chart::{build_admissible_chart, build_admissible_chart_with, extend_chart, Chart, ChartDiagnostics, ChartOptions, ExtendedChart};
pub use curve::{Curve, GraphProfile, LiftedCurve};
pub use good::{is_q_good, is_q_good_with, orbit_curves, GoodnessReport, ORBIT_SEGMENT};
pub use order::{curve_order, curve_order_with, right_of, separation, CurveOrder, Region, SEPARATION_TOL};
pub use search::{
    find_brouwer_curve, find_brouwer_curve_with, Candidate, CurveSearch, GraphSearch, SearchOutcome, SearchRegistry, SearchResult,
    VerticalSearch,
};

/// Minimal pairwise separation in `𝔸` of a family of lifted curves.
pub fn family_separation(curves: &[LiftedCurve], tol: f64) -> GoodnessReport {
    good::report_for(curves, tol)
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BrouwerError {
    #[error("invalid curve: {0}")]
    BadCurve(String),
    #[error("invalid region: {0}")]
    BadRegion(String),
    #[error("no {q}-good curve found (best separation {best_separation})")]
    NotFound { q: usize, best_separation: f64, best: Option<Box<Curve>> },
    #[error("region area {area} below {min}")]
    Degenerate { area: f64, min: f64 },
    #[error("image curve is not to the right of the curve ({0:?})")]
    NotBrouwer(CurveOrder),
    #[error("chart curve must be a graph over y")]
    NotAGraph,
    #[error("interpolated chart is not injective (det {min_det})")]
    NotInjective { min_det: f64 },
    #[error("Jacobian correction failed: {0}")]
    Correction(moser::MoserError),
    #[error("chart check `{what}` failed: {value} ≥ {tol}")]
    ChartCheck { what: &'static str, value: f64, tol: f64 },
    #[error("u = {u} outside the extension window of size {window}")]
    WindowExceeded { u: f64, window: i64 },
    #[error("chart inverse did not converge at ({x}, {y})")]
    InverseFailed { x: f64, y: f64 },
}

pub type Result<T> = std::result::Result<T, BrouwerError>;
