//! Central tolerance constants.
//!
//! All thresholds used by the certification pipeline live here so that the
//! trade-offs are visible in one place. The geometric tolerances assume
//! O(1)-scaled domains and finite-difference Hessians of the signed distance
//! with step `1e-4·(1+|x|)`.

/// Spectral decomposition accuracy: `‖Qv − λv‖ ≤ TOL_EIG·max(1,‖Q‖_F)`.
pub const TOL_EIG: f64 = 1e-10;

/// Orthonormality tolerance for frames.
pub const TOL_FRAME: f64 = 1e-12;

/// Numerical-rank pivot threshold for Gram-Schmidt.
pub const RANK_PIVOT: f64 = 1e-10;

/// Jacobi sweep stop: off-diagonal Frobenius norm vs `‖Q‖_F`.
pub const JACOBI_OFFDIAG: f64 = 1e-13;

/// Maximum Jacobi sweeps before giving up.
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Boundary membership in rho0-units normalized by the gradient norm.
pub const TOL_BD: f64 = 1e-8;

/// Minimum usable gradient norm on the boundary.
pub const G_MIN: f64 = 1e-6;

/// Maximum Newton iterations for the nearest-point projection.
pub const PROJ_MAX_ITER: usize = 100;

/// A boundary point is p-flat when `max_{i≤p} |ν_i|` is below this.
pub const TOL_FLAT: f64 = 1e-6;

/// Certification slack: p-convex means `min s_p ≥ −TOL_CERT`.
pub const TOL_CERT: f64 = 1e-6;

/// Strict-convexity margin for the strongly-p-convex verdict.
pub const TOL_STRICT: f64 = 1e-6;

/// A Levi form value below this (in absolute value) counts as vanishing.
pub const TOL_LEVI: f64 = 1e-6;

/// A sectional Gaussian curvature below this counts as zero.
pub const TOL_K: f64 = 1e-6;
