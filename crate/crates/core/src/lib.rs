//! Approximate first-order stationary points of smooth nonconvex-nonconcave
//! min-max problems `min_x max_{y∈Y} f(x, y)` over a small domain `Y`, via
//! Taylor surrogates of `f(x, ·)`.
//!
//! Every numeric type is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! at the crate root fix the scalar to `f64`.

// NaN-rejecting guards are written as negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod brute;
pub mod error;
pub mod geometry;
pub mod instances;
pub mod krylov;
pub mod linalg;
pub mod moreau;
pub mod problems;
pub mod scalar;
pub mod surrogate;
pub mod solvers;
pub mod theory;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type Domain = geometry::Domain<f64>;
pub type SmoothnessProfile = problems::SmoothnessProfile<f64>;
pub type ProblemInstance = problems::ProblemInstance<f64>;
pub type HardInstanceSpec = instances::HardInstanceSpec<f64>;
pub type SolverConfig = solvers::SolverConfig<f64>;
pub type RunTrace = solvers::RunTrace<f64>;
pub type DiameterVerdict = theory::DiameterVerdict<f64>;
