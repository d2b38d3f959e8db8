//! Exact verification workbench for two-faced (left/right) non-crossing
//! combinatorics and the moment-cumulant calculus built on top of it.
//!
//! Everything is computed over exact rationals: partition lattices and their
//! Möbius functions, scalar and matrix-valued moment/cumulant transforms,
//! concrete operator models on truncated free products, matrix amplification,
//! and truncated formal-series transform identities.

pub mod chi;
pub mod matrix;
pub mod mobius;
pub mod models;
pub mod opval;
pub mod partition;
pub mod rat;
pub mod scalar;
pub mod series;

use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on the arguments was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// A configured size bound was exceeded.
    #[error("size limit exceeded: {what} = {got}, bound {bound}")]
    SizeLimit {
        /// Name of the bounded quantity.
        what: String,
        /// Requested value.
        got: usize,
        /// Configured bound.
        bound: usize,
    },
    /// A table lookup failed for data the caller was required to supply.
    #[error("missing data: {0}")]
    MissingData(String),
    /// Input text could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),
}

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;

/// Global order bound used by the word-based calculi, overridable through the
/// `BIFREE_MAX_ORDER` environment variable.
pub fn max_order() -> usize {
    std::env::var("BIFREE_MAX_ORDER")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(8)
}
