use thiserror::Error;

/// Errors raised by the numerical routines and estimators.
#[derive(Debug, Error)]
pub enum Error {
    /// A point lies outside the model domain (e.g. `|z| >= 1` in the disc).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A quadrature or refinement loop failed to reach its tolerance.
    #[error("numeric failure in {context}: {detail}")]
    Numeric { context: &'static str, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn numeric(context: &'static str, detail: impl Into<String>) -> Self {
        Error::Numeric {
            context,
            detail: detail.into(),
        }
    }

    /// True for failures of numerical convergence, as opposed to bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Numeric { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
