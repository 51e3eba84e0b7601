use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] pirec_core::Error),

    #[error("{0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable category used in CLI error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Core(_) => "core",
            Self::Config(_) => "config",
            Self::Io { .. } => "io",
            Self::Parse { .. } => "parse",
        }
    }

    /// Whether the error stems from invalid user input (usage-level exit status).
    pub fn is_usage(&self) -> bool {
        match self {
            Self::Config(_) | Self::Parse { .. } => true,
            Self::Io { source, .. } => source.kind() == std::io::ErrorKind::NotFound,
            Self::Core(_) => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
