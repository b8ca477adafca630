use std::path::PathBuf;

use fleetsim_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Rejected configuration; the message names the violated invariant.
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Usage(String),
    #[error("every replication was unstable; no delivery-time estimate")]
    AllUnstable,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Format(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    /// 1 for invalid configuration or usage, 2 when no stable estimate exists,
    /// 3 for IO and format failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 1,
            CliError::Core(CoreError::InvalidConfig(_) | CoreError::InvalidArgument(_)) => 1,
            CliError::AllUnstable => 2,
            _ => 3,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Format(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Format(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
