use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("size mismatch: expected {expected}, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },

    #[error("non-finite value produced by {0}")]
    NonFinite(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("Picard iteration did not contract after {iterations} iterations (last ratio {last_ratio:.3}); shorten the horizon")]
    NonContraction { iterations: usize, last_ratio: f64 },

    #[error("solution blew up at t = {time}: norm {norm:e} exceeds cap {cap:e}")]
    BlowUp { time: f64, norm: f64, cap: f64 },

    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonContraction { .. } | Error::BlowUp { .. } | Error::NonFinite(_) => 3,
            Error::Io { .. } => 1,
            _ => 2,
        }
    }

    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument { .. } => "invalid_argument",
            Error::GridMismatch(_) => "grid_mismatch",
            Error::SizeMismatch { .. } => "size_mismatch",
            Error::NonFinite(_) => "non_finite",
            Error::Hypothesis(_) => "hypothesis",
            Error::NonContraction { .. } => "non_contraction",
            Error::BlowUp { .. } => "blow_up",
            Error::Config { .. } => "config",
            Error::Parse { .. } => "parse",
            Error::Io { .. } => "io",
        }
    }
}
