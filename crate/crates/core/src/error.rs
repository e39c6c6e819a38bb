use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("solver did not converge: {0}")]
    NonConvergence(String),
    #[error("tail fit failed: {0}")]
    TailFit(String),
    #[error("fixed point iteration does not contract: rate {rate:.4}")]
    NonContraction { rate: f64 },
    #[error("bound violated at r={location}: {detail}")]
    BoundViolation { location: f64, detail: String },
    #[error("point outside the tubular neighbourhood: {0}")]
    OutOfTube(String),
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
    #[error("identity check failed: {0}")]
    Identity(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
