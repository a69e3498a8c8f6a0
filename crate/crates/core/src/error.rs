use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("grid spec mismatch: {0}")]
    SpecMismatch(String),
    #[error("invalid grid spec: {0}")]
    InvalidSpec(String),
    #[error("tile height iteration did not converge; last bracket [{lo}, {hi}]")]
    NoConvergence { lo: f64, hi: f64 },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("cancellation check failed for {component}: moment {moment} = {value:e}")]
    Cancellation {
        component: String,
        moment: String,
        value: f64,
    },
    #[error("pair '{pair}' violates the decay bound at derivative order {order}")]
    Decay { pair: String, order: usize },
    #[error("support violation: {count} samples outside the enlarged rectangle")]
    Support { count: usize, first: Vec<usize> },
    #[error("rectangle is not contained in the given set")]
    NotContained,
    #[error("size limit: {0}")]
    SizeLimit(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
