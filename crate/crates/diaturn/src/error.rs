//! Crate-wide error type.

/// Errors produced anywhere in the pipeline.
///
/// Variants are grouped by subsystem; [`Error::exit_code`] maps them onto
/// the CLI's stable exit-code contract (2 = input/validation error,
/// 3 = backend/runtime error).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    Timeline(String),
    #[error("line {line}: {msg}")]
    ParseLine { line: usize, msg: String },
    #[error("entry {index}: {msg}")]
    Entry { index: usize, msg: String },
    #[error("{0}")]
    Codec(String),
    #[error("{0}")]
    Dialogue(String),
    #[error("{0}")]
    Metrics(String),
    #[error("{0}")]
    Config(String),
    #[error("backend: {0}")]
    Backend(String),
    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Exit code for the CLI: 3 for backend/runtime failures, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Backend(_) => 3,
            _ => 2,
        }
    }

    pub(crate) fn at_line(line: usize, msg: impl Into<String>) -> Error {
        Error::ParseLine {
            line,
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
