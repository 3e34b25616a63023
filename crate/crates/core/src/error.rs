use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("argument outside domain: {0}")]
    Domain(String),
    #[error("pilot length {tau} cannot separate {needed} sequences")]
    PilotLength { tau: usize, needed: usize },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("missing channel statistics: {0}")]
    MissingStatistics(String),
    #[error("empty ensemble")]
    EmptyEnsemble,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
