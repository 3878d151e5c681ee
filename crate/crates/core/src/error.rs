use thiserror::Error;

/// Errors raised by the pipeline stages and numeric kernels.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("singular covariance for class {class}")]
    SingularCovariance { class: String },

    #[error("did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64, best: Vec<f64> },

    #[error("fit error: {0}")]
    Fit(String),

    #[error("no seeds left for class {class} after filtering")]
    EmptySeeds { class: usize },

    #[error("artifact error: {0}")]
    Artifact(String),

    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
