use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("invalid GA configuration: {0}")]
    Config(String),

    #[error("failed to parse document: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
