//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by scenario construction, metrics, solvers, and the harness.
#[derive(Debug, Error)]
pub enum Error {
    /// A quantity violated a domain precondition (nonpositive distance, empty grid, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// An index was outside the valid range for the given dimension.
    #[error("index {index} out of range for {what} (size {size})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        size: usize,
    },

    /// A retraction step produced a zero column; the caller should shrink the step.
    #[error("retraction produced a zero column (column {column}); reduce the step size")]
    ZeroColumn { column: usize },

    /// Input beamformer exceeds the per-AP power budget.
    #[error("per-AP power {power:.6e} W at AP {ap} exceeds the budget {budget:.6e} W")]
    PowerViolation { ap: usize, power: f64, budget: f64 },

    /// A per-AP channel matrix was numerically rank deficient.
    #[error("channel matrix for AP {ap} is rank deficient; zero-forcing is undefined")]
    SingularChannel { ap: usize },

    /// The exhaustive oracle refused an instance that is too large to enumerate.
    #[error("oracle refused: {0}")]
    OracleRefused(String),

    /// Configuration file could not be parsed or failed validation.
    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
