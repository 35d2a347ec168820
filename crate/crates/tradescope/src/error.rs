use std::io;
use std::path::PathBuf;

use crate::backend::BackendError;

pub type Result<T, E = AppError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{0}")]
    Validation(String),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    #[error("{}: {reason}", path.display())]
    Format { path: PathBuf, reason: String },

    #[error(transparent)]
    Pipeline(#[from] tradescope_core::Error),

    #[error(transparent)]
    Backend(#[from] BackendError),

    #[error("all {0} runs failed")]
    AllFailed(usize),
}

impl AppError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        AppError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<PathBuf>, reason: impl ToString) -> Self {
        AppError::Format {
            path: path.into(),
            reason: reason.to_string(),
        }
    }

    /// 1 validation, 2 I/O, 3 pipeline, 4 backend.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Validation(_) => 1,
            AppError::Io { .. } | AppError::Format { .. } => 2,
            AppError::Pipeline(_) | AppError::AllFailed(_) => 3,
            AppError::Backend(_) => 4,
        }
    }
}
