//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its admissible domain (caller error).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The input series cannot support the requested computation
    /// (e.g. zero sample variance).
    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    /// A quadrature did not converge: successive resolutions disagree by more
    /// than the configured tolerance.
    #[error("quadrature non-convergence: {0}")]
    NonConvergence(String),

    /// An iterative numerical routine failed (eigensolver sweep limit,
    /// bisection bracket failure, Toeplitz breakdown, ...).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// An input file could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),

    /// I/O failure, annotated with the path involved.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// JSON (de)serialization failure.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// True for errors that indicate bad user input rather than an internal
    /// failure; the CLI maps these to exit code 2.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_) | Error::DegenerateSeries(_) | Error::Parse(_)
        )
    }
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
