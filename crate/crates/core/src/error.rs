use std::path::PathBuf;

/// Errors raised anywhere in the laboratory.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("point ({x:.6}, {y:.6}) or its stencil lies outside the grid")]
    OutOfDomain { x: f64, y: f64 },

    #[error("degenerate input: {0}")]
    Degeneracy(String),

    #[error("positivity set of the envelope is empty: c = {c} <= c0 = {c0}")]
    EmptyPositivitySet { c: f64, c0: f64 },

    #[error("quadrature did not reach the requested accuracy (estimate {estimate}, error {error:e})")]
    Accuracy { estimate: f64, error: f64 },

    #[error("iteration failed after {iterations} steps (residual {residual:e}): {reason}")]
    Iteration {
        iterations: usize,
        residual: f64,
        reason: String,
    },

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("section at height t = {t:e} touches the edge of the grid")]
    Truncation { t: f64 },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("linear solver failure: {0}")]
    LinearSolve(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
