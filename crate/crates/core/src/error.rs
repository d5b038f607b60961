use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, F2sError>;

/// Errors raised anywhere in the pipeline.
///
/// `Config`, `Data`, `Format` and `Io` are caller-side problems; `Numeric` and
/// `Internal` indicate the computation itself went wrong.
#[derive(Debug, Error)]
pub enum F2sError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("format error in {path} at byte {offset}: {message}")]
    Format {
        path: PathBuf,
        offset: u64,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(String),

    #[error("internal error: {0}")]
    Internal(String),
}

impl F2sError {
    pub fn config(msg: impl Into<String>) -> Self {
        F2sError::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        F2sError::Data(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        F2sError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad inputs rather than by the computation.
    pub fn is_user_error(&self) -> bool {
        matches!(
            self,
            F2sError::Config(_)
                | F2sError::Data(_)
                | F2sError::Format { .. }
                | F2sError::Io { .. }
                | F2sError::Json { .. }
                | F2sError::UndefinedCorrelation(_)
        )
    }
}
