use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Cholesky factorization hit a non-positive pivot: the empirical
    /// covariance is (numerically) singular, e.g. when n <= d or the raw
    /// vectors are linearly dependent.
    #[error("degenerate ensemble: covariance factorization failed at pivot {pivot} (value {value:.3e})")]
    DegenerateEnsemble { pivot: usize, value: f64 },

    /// A triangular solve met a zero diagonal entry.
    #[error("singular triangular factor: zero diagonal at index {index}")]
    SingularFactor { index: usize },

    /// A schedule that needs ground truth was driven without one.
    #[error("oracle smoothing schedule requires a ground-truth signal and its norm")]
    MissingOracle,

    #[error("spectral initialization failed: no dominant direction (residual {residual:.3e})")]
    InitializationFailure { residual: f64 },

    #[error("malformed ensemble dump: {0}")]
    MalformedDump(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
