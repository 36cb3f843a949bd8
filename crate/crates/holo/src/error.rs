use std::io;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] holo_core::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0} self-test check(s) failed")]
    SelfTest(usize),
}

impl Error {
    pub fn io(path: impl AsRef<Path>, source: io::Error) -> Self {
        Error::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    pub fn format(path: impl AsRef<Path>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.as_ref().to_path_buf(),
            message: message.into(),
        }
    }

    /// Process exit status: 1 for I/O and file format problems, 2 for bad
    /// configuration, 3 when a solver fails numerically.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } | Error::Format { .. } | Error::Csv(_) => 1,
            Error::Config(_) => 2,
            Error::Core(e) if e.is_numeric() => 3,
            Error::SelfTest(_) => 3,
            Error::Core(_) => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
