use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("{path}:{line}: parse error: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("validation error in entry {entry}: {message}")]
    Validation { entry: usize, message: String },

    #[error("generation error: {0}")]
    Generation(String),

    #[error("degenerate task: {0}")]
    DegenerateTask(String),

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("checkpoint mismatch: {0}")]
    Mismatch(String),

    #[error("training aborted at step {step}: {message}")]
    TrainingAborted { step: usize, message: String },

    #[error("gradient check failed: {0}")]
    GradientMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short stable name of the error class, used by the CLI.
    pub fn class(&self) -> &'static str {
        match self {
            Error::Shape(_) => "shape",
            Error::Config(_) => "config",
            Error::EmptyInput(_) => "empty-input",
            Error::NonFinite(_) => "non-finite",
            Error::Parse { .. } => "parse",
            Error::Validation { .. } => "validation",
            Error::Generation(_) => "generation",
            Error::DegenerateTask(_) => "degenerate-task",
            Error::Integrity(_) => "integrity",
            Error::Mismatch(_) => "mismatch",
            Error::TrainingAborted { .. } => "training-aborted",
            Error::GradientMismatch(_) => "gradient-mismatch",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }

    /// True for failures caused by malformed input data rather than runtime faults.
    pub fn is_data_validation(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. } | Error::Validation { .. } | Error::Csv(_)
        )
    }
}
