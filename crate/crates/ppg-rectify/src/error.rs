use std::path::PathBuf;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// Line numbers are 1-based.
    #[error("{}:{line}: {msg}", path.display())]
    Parse { path: PathBuf, line: usize, msg: String },
    #[error("{}: {msg}", path.display())]
    Persistence { path: PathBuf, msg: String },
    #[error(transparent)]
    Core(#[from] ppg_rectify_core::Error),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        CliError::Parse { path: path.into(), line, msg: msg.into() }
    }

    pub(crate) fn persistence(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        CliError::Persistence { path: path.into(), msg: msg.into() }
    }
}
