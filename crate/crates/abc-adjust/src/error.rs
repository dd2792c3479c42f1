use std::path::PathBuf;

use abc_adjust_core::ErrorKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] abc_adjust_core::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Error::Config(message.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => crate::EXIT_CONFIG,
            Error::Io { .. } | Error::Parse { .. } => crate::EXIT_DATA,
            Error::Core(e) => match e.kind() {
                ErrorKind::Config => crate::EXIT_CONFIG,
                ErrorKind::Data => crate::EXIT_DATA,
                ErrorKind::Numerical => crate::EXIT_NUMERICAL,
            },
        }
    }
}
