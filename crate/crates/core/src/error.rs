use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("format error at byte {offset}: {message}")]
    Format { offset: usize, message: String },

    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    Corrupt { stored: u32, computed: u32 },

    #[error("invalid parameter: {0}")]
    Param(String),

    /// A failure tied to one gallery item during enrollment.
    #[error("enrolling '{id}': {source}")]
    Enroll {
        id: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(offset: usize, message: impl Into<String>) -> Self {
        Error::Format {
            offset,
            message: message.into(),
        }
    }

    pub(crate) fn param(message: impl Into<String>) -> Self {
        Error::Param(message.into())
    }

    /// Format and I/O failures are data errors; parameter errors are usage errors.
    pub fn is_data_error(&self) -> bool {
        match self {
            Error::Io { .. } | Error::Format { .. } | Error::Corrupt { .. } => true,
            Error::Param(_) => false,
            Error::Enroll { source, .. } => source.is_data_error(),
        }
    }
}
