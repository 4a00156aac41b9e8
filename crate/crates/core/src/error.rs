use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by estimation, simulation, evaluation and I/O routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("covariance error: {0}")]
    Covariance(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid initializer: {0}")]
    InvalidInitializer(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("rank error: {0}")]
    Rank(String),

    #[error("regression error: {reason} (condition estimate {condition:e})")]
    Regression { reason: String, condition: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("incomplete panel: {count} missing cells, first: {first}")]
    Incomplete { count: usize, first: String },

    #[error("duplicate panel cell {0}")]
    Duplicate(String),

    #[error("{failed} of {total} replications failed (more than 1%)")]
    FailureThreshold { failed: usize, total: usize },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Process exit code used by the command-line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Io { .. }
            | Error::Parse { .. }
            | Error::Incomplete { .. }
            | Error::Duplicate(_)
            | Error::InvalidInput(_)
            | Error::Dimension(_)
            | Error::InsufficientData(_) => 3,
            _ => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
