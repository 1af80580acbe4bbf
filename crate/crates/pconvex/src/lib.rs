//! Numerical certification of p-convexity for smoothly bounded implicit
//! domains in Rⁿ, and synthesis of p-plurisubharmonic defining functions.
//!
//! A boundary is p-convex when the sum of its p smallest principal interior
//! curvatures is nonnegative at every boundary point; a C² function is
//! p-plurisubharmonic (p-psh) when its Hessian has nonnegative trace on every
//! p-plane. This crate certifies the boundary condition by sampling, builds a
//! defining function of the form `φ(h(δ)) + ε·χ·|x|²` from the signed
//! distance δ, and verifies the result on stratified grids. Complementary
//! modules check subharmonicity of pullbacks along conformal harmonic maps
//! (the minimal-surface side of the story, p = 2) and the Levi form /
//! strong-pseudoconvexity behaviour of interior level sets in even dimension.
//!
//! Everything is pure and deterministic for a fixed seed: values are
//! immutable after construction and safe to share across threads.

pub mod convexity;
pub mod error;
pub mod field;
pub mod harmonic;
pub mod levi;
pub mod linalg;
pub mod sdf;
pub mod synthesis;
pub mod tol;

pub use error::{Error, Result};
pub use field::{build_domain, catalog, DomainSpec, ImplicitDomain, ScalarField};
pub use linalg::{eigh, min_trace_p, trace_on_plane, Frame, Spectrum, SymMatrix};
