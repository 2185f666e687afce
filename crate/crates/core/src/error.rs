use thiserror::Error;

/// Errors raised by the numerical kernel, geometry, bounds, synthesis and
/// evolution layers.
///
/// Numeric payloads are widened to `f64` so the error type does not depend
/// on the scalar parameter.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("hermiticity check failed: max |M - M^dagger| = {deviation:e} exceeds {tol:e}")]
    NotHermitian { deviation: f64, tol: f64 },

    #[error("unitarity check failed: max |U^dagger U - I| = {deviation:e} exceeds {tol:e}")]
    NotUnitary { deviation: f64, tol: f64 },

    #[error("rank deficient: smallest singular value {smallest:e} below {tol:e}")]
    RankDeficient { smallest: f64, tol: f64 },

    #[error("insufficient complement: needed {needed} independent directions, found {found}")]
    InsufficientComplement { needed: usize, found: usize },

    #[error("invalid frame: {0}")]
    InvalidFrame(String),

    #[error("invalid projector: {0}")]
    InvalidProjector(String),

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("frame does not span the initial subspace: residual {residual:e}")]
    FrameProjectorMismatch { residual: f64 },

    #[error("mesh too coarse at step {step}: projector jump {jump:e}")]
    MeshTooCoarse { step: usize, jump: f64 },

    #[error("curve not closed: closure residual {residual:e} exceeds {limit:e}")]
    NotClosed { residual: f64, limit: f64 },

    #[error("vectors not orthogonal: overlap {overlap:e}")]
    NotOrthogonal { overlap: f64 },

    #[error("phase {theta} outside [0, 2pi)")]
    PhaseOutOfRange { theta: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown gate '{0}'")]
    UnknownGate(String),
}

pub type Result<T> = std::result::Result<T, Error>;
