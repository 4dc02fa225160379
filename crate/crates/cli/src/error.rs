use std::io;
use std::path::PathBuf;

/// Exit status 0 is success, 1 a data or validation failure, 2 an
/// environment or IO failure.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("writing output: {0}")]
    Output(#[from] io::Error),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        CliError::Data(message.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Data(_) => 1,
            CliError::Io { .. } | CliError::Output(_) => 2,
        }
    }
}
