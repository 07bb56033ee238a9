//! Points, lifts and sampled metrics on the closed annulus `𝔸 = ℝ/ℤ × [0,1]`
//! and its universal cover `ℝ × [0,1]`.

mod geom;
mod map;
mod metric;

pub use geom::{annulus_distance, circle_norm, wrap_signed, LiftPoint, Point};
pub use map::{mat, FnMap, IdentityMap, LiftMap, Mat2};
pub use metric::{
    c0_distance, derivative_sup, diffr_distance, lift_sup_distance, principal_lift_offset, MetricSample, SampleGrid, FD_STEP,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnnulusError {
    #[error("map is not C0-close to the identity: displacement {sup} at ({x}, {y})")]
    NotCloseToIdentity { sup: f64, x: f64, y: f64 },
    #[error("derivative order must be at least 1")]
    BadOrder,
}
