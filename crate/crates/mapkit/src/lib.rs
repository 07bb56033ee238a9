//! Diffeomorphism algebra on the annulus.
//!
//! An [`AnnulusMap`] is an immutable expression tree over registered
//! [`Primitive`]s with formal inverses and a distinguished lift. Rotations,
//! twists and Hamiltonian bumps are exactly area preserving with closed-form
//! Jacobians; [`GridMap`] is an interpolated sampled field.

mod ak;
mod bump;
mod grid;
mod prim;
mod rotation;
mod tree;
mod twist;

pub use ak::{ak_build, final_rotation, stage_conjugator, AkSchedule, AkStage, BumpSpec};
pub use bump::{BumpIntegrator, HamiltonianBump};
pub use grid::GridMap;
pub use prim::{fd_jacobian, Primitive, PrimitiveRegistry};
pub use rotation::Rotation;
pub use tree::{compose, iterate, iterate_naive, jacobian_det, AnnulusMap};
pub use twist::Twist;

pub use annulus_core::{LiftPoint, Mat2, Point};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MapError {
    #[error("unknown primitive tag `{0}`")]
    UnknownPrimitive(String),
    #[error("bad parameters for `{tag}`: {msg}")]
    BadParams { tag: String, msg: String },
    #[error("malformed map expression: {0}")]
    Malformed(String),
    #[error("schedule does not match target: {0}")]
    ScheduleMismatch(String),
    #[error("primitive `{0}` cannot be serialised")]
    NotSerialisable(String),
}

pub type Result<T> = std::result::Result<T, MapError>;
