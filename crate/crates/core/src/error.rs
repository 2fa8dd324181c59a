//! Crate-wide error type.

use thiserror::Error;

/// Every fallible operation in the crate returns this error.
#[derive(Debug, Error)]
pub enum Error {
    /// Two vectors (or a vector and a spectrum) disagree on dimension.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A solver configuration violates an admissibility constraint.
    #[error("configuration error: {0}")]
    Config(String),

    /// A run produced NaN or infinite values.
    #[error("numeric blow-up at iteration {iteration}: {detail}")]
    NonFinite { iteration: usize, detail: String },

    /// The analytic closed forms do not cover the requested parameters.
    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    /// A rate-fit window is unusable.
    #[error("fit window error: {0}")]
    Window(String),

    /// Monte Carlo summary and analytic result were computed on different checkpoints.
    #[error("checkpoint mismatch: {0}")]
    CheckpointMismatch(String),

    /// The truncated problem leaves too much mass in the discarded tail.
    #[error("truncation rule violated: tail {tail:.3e} exceeds {allowed:.3e}; need d >= {required_d}")]
    Truncation { tail: f64, allowed: f64, required_d: usize },

    /// A document had an unexpected format tag or version.
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}
