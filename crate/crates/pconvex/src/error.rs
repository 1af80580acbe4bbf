//! Shared error type for the whole pipeline.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("matrix has non-finite entries")]
    InvalidMatrix,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionError { expected: usize, got: usize },

    #[error("plane dimension p={p} out of range for n={n}")]
    InvalidP { p: usize, n: usize },

    #[error("input vectors are rank deficient (pivot {pivot:.3e} below threshold)")]
    RankError { pivot: f64 },

    #[error("frame vectors are not orthonormal (residual {residual:.3e})")]
    InvalidFrame { residual: f64 },

    #[error("field evaluation produced a non-finite value at {point:?}")]
    EvaluationError { point: Vec<f64> },

    #[error("invalid catalog domain: {reason}")]
    CatalogError { reason: String },

    #[error("expression parse error: {reason}")]
    ParseError { reason: String },

    #[error("boundary projection did not converge from {from:?}")]
    ProjectionError { from: Vec<f64> },

    #[error("gradient norm {norm:.3e} below threshold at {point:?}")]
    DegenerateGradient { point: Vec<f64>, norm: f64 },

    #[error("found only {found} of {requested} boundary samples within budget")]
    SamplingError { requested: usize, found: usize },

    #[error("frame is not tangent to the boundary (normal component {residual:.3e})")]
    FrameError { residual: f64 },

    #[error("profile construction failed: {reason}")]
    ConstructionError { reason: String },

    #[error("boundary is not {p}-convex (witness s_p = {min_sp:.6} at {witness:?})")]
    NotPConvex {
        p: usize,
        min_sp: f64,
        witness: Vec<f64>,
    },

    #[error("map image leaves the closed domain (value {value:.3e} at parameter {param:?})")]
    ImageOutsideDomain { param: (f64, f64), value: f64 },

    #[error("map fails conformal-harmonic residual check ({residual:.3e} at {param:?})")]
    NotConformalHarmonic { param: (f64, f64), residual: f64 },
}
