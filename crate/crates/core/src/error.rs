use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An API was called in the wrong phase or with inconsistent arguments.
    #[error("usage error: {0}")]
    Usage(String),

    /// A configuration value is out of range or unparseable.
    #[error("config error: {0}")]
    Config(String),

    #[error("cannot load {}: {source}", path.display())]
    Load {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// The data is well-formed but inconsistent (e.g. a gold label that names no entity).
    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("training error: {0}")]
    Training(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}
