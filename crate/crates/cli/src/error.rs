use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    /// Invalid or unreadable experiment description.
    #[error("configuration error: {0}")]
    Config(String),
    /// Failure while computing or writing results.
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl ExperimentError {
    pub fn exit_code(&self) -> u8 {
        match self {
            ExperimentError::Config(_) => 2,
            ExperimentError::Runtime(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, ExperimentError>;
