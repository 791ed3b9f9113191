use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("covariance is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e}, tolerance {tolerance:e})")]
    NotPositiveSemidefinite { min_eigenvalue: f64, tolerance: f64 },

    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("metadata mismatch: {0}")]
    MetadataMismatch(String),

    #[error("reference spectrum is not positive at {} frequency point(s): {points:?}", points.len())]
    DivisionDomain { points: Vec<f64> },

    #[error("band {band} has {found} usable points, at least {needed} required")]
    InsufficientPoints {
        band: &'static str,
        found: usize,
        needed: usize,
    },

    #[error("singular design: {0}")]
    SingularDesign(String),

    #[error("fit did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("degenerate resample: {0}")]
    DegenerateResample(String),

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
