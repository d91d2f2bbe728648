use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the solver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular geometry: {0}")]
    SingularGeometry(String),

    #[error("iterative solver did not converge after {iterations} iterations (final relative residual {final_residual:.3e})")]
    NonConvergence {
        iterations: usize,
        final_residual: f64,
        history: Vec<f64>,
    },

    #[error("series did not converge: {0}")]
    SeriesDivergence(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("non-finite value in {term}")]
    NonFinite { term: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("schema mismatch: expected version {expected}, found {found}")]
    Schema { expected: u32, found: u32 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
