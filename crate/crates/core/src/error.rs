use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the lab.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A bound's side condition does not hold; `residual` is how far off it is.
    #[error("precondition violated: {what} (residual {residual:e})")]
    PreconditionViolation { what: String, residual: f64 },

    /// A conditional estimate has nothing to condition on.
    #[error("degenerate condition: {0}")]
    DegenerateCondition(String),

    /// Adaptive quadrature hit its subdivision limit before reaching tolerance.
    #[error("accuracy failure: best estimate {estimate:e} with error bound {error_bound:e}")]
    AccuracyFailure { estimate: f64, error_bound: f64 },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: malformed file: {reason}", path.display())]
    Format { path: PathBuf, reason: String },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
