use std::path::PathBuf;

use thiserror::Error;

/// Everything that can stop a CLI run, grouped by exit code.
#[derive(Debug, Error)]
pub enum AppError {
    #[error("config line {line}: {msg}")]
    ConfigSyntax { line: usize, msg: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("missing config key `{0}`")]
    MissingKey(String),
    #[error("config key `{key}`: {msg}")]
    BadValue { key: String, msg: String },
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Image(#[from] crate::image::ImageError),
    #[error("{0}")]
    Core(#[from] edgeflow_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    /// Verification checks ran to completion but some failed.
    #[error("checks failed: {0}")]
    ChecksFailed(String),
}

impl AppError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io { path: path.into(), source }
    }

    pub fn bad_value(key: &str, msg: impl Into<String>) -> Self {
        AppError::BadValue { key: key.into(), msg: msg.into() }
    }

    /// 2 validation, 3 numerical (Picard or linear solver), 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Core(e) if e.is_numerical() => 3,
            AppError::Io { .. } | AppError::Image(_) | AppError::Json(_) => 4,
            _ => 2,
        }
    }
}

pub type AppResult<T> = Result<T, AppError>;
