//! Solvers for square-root-loss regression with convex (ℓ1) and nonconvex
//! (SCAD, MCP) regularizers.
//!
//! The crate implements a two-stage proximal majorization-minimization
//! driver whose convex subproblems are solved in the dual by a sparse
//! semismooth Newton method, three ADMM baselines (primal, dual, and a
//! nonconvex variant), synthetic benchmark generators, LIBSVM ingestion,
//! accuracy metrics, and a benchmark harness behind the `srreg` CLI.
//!
//! All numeric code is generic over the scalar type through [`Scalar`];
//! `f64` aliases for the main types live at the crate root.

pub mod admm;
pub mod bench;
pub mod data;
pub mod design;
pub mod error;
pub mod libsvm;
pub mod linalg;
pub mod metrics;
pub mod normal;
pub mod oracle;
pub mod pmm;
pub mod prox;
pub mod regularizer;
pub mod rng;
pub mod scalar;
pub mod subproblem;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// `f64` instantiations of the main types.
pub type DenseVec64 = linalg::DenseVec<f64>;
pub type DesignMatrix64 = design::DesignMatrix<f64>;
pub type ProblemData64 = data::ProblemData<f64>;
pub type RegularizerSpec64 = regularizer::RegularizerSpec<f64>;
pub type SolveResult64 = metrics::SolveResult<f64>;
pub type SsnConfig64 = subproblem::SsnConfig<f64>;
pub type PmmConfig64 = pmm::PmmConfig<f64>;
pub type AdmmConfig64 = admm::AdmmConfig<f64>;
