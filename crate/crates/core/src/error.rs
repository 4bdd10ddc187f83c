use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("time step {dt:e} ms is too large for this tier; a step of at most {required:e} ms is required")]
    StepTooLarge { dt: f64, required: f64 },

    #[error("time span {span:e} ms exceeds the oracle limit of {limit:e} ms")]
    SpanTooLong { span: f64, limit: f64 },

    #[error("state norm drifted by {drift:e} during integration")]
    NormDrift { drift: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("non-finite {what} at epoch {epoch}")]
    NonFinite { epoch: usize, what: &'static str },

    #[error("posterior underflow: every node has zero weight (max log-likelihood {max_log_likelihood})")]
    PosteriorUnderflow { max_log_likelihood: f64 },

    #[error("finite difference did not converge (last relative change {relative_change:e}); try delta = {suggested:e}")]
    NotConverged { suggested: f64, relative_change: f64 },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
