use std::io;

/// Errors raised by ingestion, simulation, scenario and statistics routines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller-supplied argument is outside its valid domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A single input record could not be accepted.
    #[error("line {line}: {message}")]
    Record { line: u64, message: String },

    /// The dataset as a whole is inconsistent (duplicate keys, dangling references, ...).
    #[error("dataset error: {0}")]
    Dataset(String),

    /// A params or scenario configuration file is malformed.
    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn record(line: u64, msg: impl Into<String>) -> Self {
        Error::Record {
            line,
            message: msg.into(),
        }
    }

    /// True for failures that originate in the filesystem rather than in the data.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
