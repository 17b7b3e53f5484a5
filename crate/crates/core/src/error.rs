use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A measure or dataset violated its construction invariants.
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    /// Two objects that must share an ambient dimension do not.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Transport order below 1.
    #[error("transport order p must be >= 1, got {0}")]
    InvalidOrder(f64),

    /// A precondition on an argument was not met.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Exact solver input too large for a dense cost matrix.
    #[error("cost matrix of {n} x {m} exceeds the size guard of {limit} entries")]
    TooLarge { n: usize, m: usize, limit: usize },

    /// The exact solver failed to reach an optimal feasible basis.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// File could not be read or written.
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A file was read but its contents are malformed.
    #[error("{path}: {msg}")]
    Parse { path: PathBuf, msg: String },

    /// Model file written by an incompatible version.
    #[error("unsupported model file: {0}")]
    Version(String),

    /// Features were evaluated with configs that differ from the model's.
    #[error("predictor configuration mismatch: {0}")]
    ConfigMismatch(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            msg: msg.into(),
        }
    }

    /// True for errors caused by numerical breakdown rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_order(p: f64) -> Result<()> {
    if p.is_finite() && p >= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidOrder(p))
    }
}
