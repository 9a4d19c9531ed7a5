use std::path::Path;

use adequacy::AdequacyError;
use mlmc::MlmcError;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("missing input: {0}")]
    Missing(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Missing(_) => 3,
            CliError::Runtime(_) => 4,
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        if e.kind() == std::io::ErrorKind::NotFound {
            CliError::Missing(format!("{}: {e}", path.display()))
        } else {
            CliError::Runtime(format!("{}: {e}", path.display()))
        }
    }
}

impl From<AdequacyError> for CliError {
    fn from(e: AdequacyError) -> Self {
        match e {
            AdequacyError::Config(_) | AdequacyError::Architecture { .. } | AdequacyError::UnknownLevel(_) => {
                CliError::Config(e.to_string())
            }
            AdequacyError::Io { ref source, .. } if source.kind() != std::io::ErrorKind::NotFound => {
                CliError::Runtime(e.to_string())
            }
            AdequacyError::Io { .. } | AdequacyError::Format { .. } => CliError::Missing(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<MlmcError> for CliError {
    fn from(e: MlmcError) -> Self {
        match e {
            MlmcError::InvalidInput(m) => CliError::Config(m),
            other => CliError::Runtime(other.to_string()),
        }
    }
}
