use std::path::PathBuf;

use comfortplan_core::Error as CoreError;

/// Failures of the file-level tools. [`AppError::exit_code`] maps them onto
/// the process exit status.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    /// The computation finished but did not reach its goal; outputs were written.
    #[error("{0}")]
    Unfinished(String),
}

impl AppError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Self::Parse {
            path: path.into(),
            message: message.to_string(),
        }
    }

    /// 1 for convergence and comparability failures, 2 for bad input.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Unfinished(_) => 1,
            Self::Core(CoreError::Bracket { .. })
            | Self::Core(CoreError::Comparability { .. })
            | Self::Core(CoreError::Optimizer(_)) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, AppError>;
