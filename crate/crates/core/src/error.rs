//! Error type shared by every module in the crate.

use std::path::PathBuf;

/// Errors produced by ingestion, configuration, and pipeline operations.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A file failed to parse; `line` is 1-based.
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    /// Per-point arrays disagree in length, or an index is out of range.
    #[error("length mismatch in {what}: expected {expected}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    /// A coordinate or value that must be finite is NaN or infinite.
    #[error("non-finite value in {what} at index {index}")]
    NonFinite { what: &'static str, index: usize },

    /// A required optional field is absent from the cloud.
    #[error("{0} required but not present in the cloud")]
    MissingField(&'static str),

    /// Invalid configuration or spec field; message names the field.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// Invalid argument to an operation.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Synthetic scene packing gave up after the attempt cap.
    #[error("infeasible packing: {0}")]
    InfeasiblePacking(String),

    /// An internal invariant was violated (a bug, not a user error).
    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
