use std::path::PathBuf;

use expdyn_core::Error as CoreError;

/// Exit status of the command-line tool.
pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NOT_ACHIEVED: i32 = 3;
pub const EXIT_RANGE: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{0}")]
    Parse(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type AppResult<T> = std::result::Result<T, AppError>;

impl AppError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io {
            path: path.into(),
            source,
        }
    }

    /// Bad input maps to 2, numeric range trouble to 4.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Core(e) => match e {
                CoreError::Overflow { .. }
                | CoreError::Range { .. }
                | CoreError::UntrustedArgument { .. }
                | CoreError::NonConvergence { .. }
                | CoreError::BranchExplosion { .. } => EXIT_RANGE,
                _ => EXIT_VALIDATION,
            },
            AppError::Io { .. } | AppError::Csv { .. } | AppError::Parse(_) | AppError::Json(_) => EXIT_VALIDATION,
        }
    }
}
