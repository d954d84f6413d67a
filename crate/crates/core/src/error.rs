use std::path::PathBuf;

use crate::validate::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid normal at {location}: norm {norm} deviates from 1")]
    InvalidNormal { norm: f64, location: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("problem failed validation ({} violation(s)); first: {}", .0.len(), .0.first().map(|v| v.to_string()).unwrap_or_default())]
    InvalidProblem(Vec<Violation>),

    #[error("numerical failure after {iterations} iteration(s): {context}")]
    NumericalFailure { iterations: usize, context: String },

    #[error("view {view} has no masked-in pixel")]
    DegenerateView { view: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("unsupported input: {0}")]
    UnsupportedInput(String),

    #[error("invalid scene spec: {0}")]
    InvalidSpec(String),

    #[error("malformed {path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }
}
