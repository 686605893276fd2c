use std::path::PathBuf;

use thiserror::Error;

/// Failures surfaced by the command-line tools.
///
/// [`AppError::prefix`] is the stable, machine-parseable tag written in front
/// of every error line; [`AppError::exit_code`] separates bad input (1) from
/// failures while running (2).
#[derive(Debug, Error)]
pub enum AppError {
    #[error("{0}")]
    Validation(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: row {row}, column {column}: {message}")]
    Parse { path: PathBuf, row: usize, column: String, message: String },
    #[error("{path}: {message}")]
    Schema { path: PathBuf, message: String },
    #[error("{context}: {source}")]
    Estimation {
        context: String,
        #[source]
        source: vinekde_core::Error,
    },
}

pub type AppResult<T> = Result<T, AppError>;

impl AppError {
    pub fn prefix(&self) -> &'static str {
        match self {
            AppError::Validation(_) => "error[invalid-argument]",
            AppError::Io { .. } => "error[io]",
            AppError::Parse { .. } => "error[parse]",
            AppError::Schema { .. } => "error[schema]",
            AppError::Estimation { .. } => "error[estimation]",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Validation(_) => 1,
            _ => 2,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io { path: path.into(), source }
    }

    pub fn schema(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        AppError::Schema { path: path.into(), message: message.into() }
    }

    pub fn estimation(context: impl Into<String>, source: vinekde_core::Error) -> Self {
        AppError::Estimation { context: context.into(), source }
    }
}
