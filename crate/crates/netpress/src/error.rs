use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("empty input")]
    EmptyInput,

    #[error("{which} split is empty")]
    EmptySplit { which: &'static str },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },

    #[error("classifier weight norm is zero")]
    ZeroNorm,

    #[error("training diverged at epoch {epoch} (non-finite loss; learning rate too high?)")]
    Diverged { epoch: usize },

    #[error("every grid cell diverged")]
    AllCellsDiverged,

    #[error("bad config: {0}")]
    BadConfig(String),

    #[error("unsupported model file version {found} (expected {expected})")]
    ModelVersion { found: u32, expected: u32 },

    #[error("corrupt model file: {0}")]
    CorruptModel(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Pipeline stage the error belongs to, used by the CLI exit message.
    pub fn stage(&self) -> &'static str {
        match self {
            Error::Parse { .. } | Error::EmptyInput | Error::EmptySplit { .. } => "data",
            Error::DimMismatch { .. } | Error::ZeroNorm => "model",
            Error::Diverged { .. } | Error::AllCellsDiverged => "train",
            Error::BadConfig(_) => "config",
            Error::ModelVersion { .. } | Error::CorruptModel(_) | Error::Json(_) => "model-io",
            Error::Io(_) | Error::Csv(_) => "io",
        }
    }
}
