//! Error type shared by every module of the crate.

use thiserror::Error;

/// Unified error for basis construction, estimation, training, and I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied parameter violates a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An evaluation point lies outside the basis domain.
    #[error("point {point} lies outside the basis domain [{lo}, {hi}]")]
    PointOutsideDomain { point: f64, lo: f64, hi: f64 },

    /// Matrix or vector shapes are incompatible.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The input data are structurally unusable (empty classes, degenerate
    /// grids, malformed files).
    #[error("data error: {0}")]
    Data(String),

    /// A numerical procedure failed (factorization, divergence, singular
    /// system).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Reading or writing a serialized model failed.
    #[error("serialization error: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}
