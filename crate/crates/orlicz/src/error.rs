use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("unsupported family: {0}")]
    UnsupportedFamily(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("grid too coarse: {0}")]
    Resolution(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("no finite bracket after {doublings} doublings")]
    Divergence { doublings: usize },
    #[error("solver did not converge{}: residual {last:e} after {iterations} iterations", .level.map(|s| format!(" at s = {s}")).unwrap_or_default())]
    NonConvergence {
        level: Option<f64>,
        iterations: usize,
        last: f64,
        residuals: Vec<f64>,
    },
    #[error("domain mismatch")]
    DomainMismatch,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
