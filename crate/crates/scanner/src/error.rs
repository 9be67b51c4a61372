use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid scan configuration: {0}")]
    Config(String),
    #[error("no plane found")]
    NoPlaneFound,
    #[error(transparent)]
    Core(#[from] pcrecon_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
