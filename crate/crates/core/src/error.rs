//! Pipeline error type shared by every stage.

use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    /// Unrecoverable corruption in an input stream, positioned so the
    /// offending region can be located in the raw file.
    #[error("corrupt input stream at line {line}, byte offset {offset}: {message}")]
    CorruptStream { line: u64, offset: u64, message: String },

    /// A stage was invoked before the stage that produces its input ran.
    #[error("missing artifact {path}; run the `{producer}` stage first")]
    MissingArtifact { path: PathBuf, producer: &'static str },

    #[error("malformed artifact {path} (record {record}): {message}")]
    Artifact {
        path: PathBuf,
        record: u64,
        message: String,
    },

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
