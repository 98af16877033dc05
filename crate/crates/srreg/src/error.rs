//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A vector or matrix entry was NaN or infinite at construction.
    #[error("non-finite entry at index {0}")]
    NonFinite(usize),

    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// `||X beta - b|| = 0`: the KKT residuals and the dual Jacobian are
    /// undefined at an overfitting point.
    #[error("overfit: ||X beta - b|| = 0, residual-based quantities are undefined")]
    Overfit,

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
