use spherekit::SphereError;
use thiserror::Error;

use crate::expr::ParseError;
use crate::sfun::SfunError;

/// Failures of a command, each with a stable exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error {0}")]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Precondition(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    /// 0 success, 1 other, 2 parse, 3 precondition, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Usage(_) => 2,
            CliError::Precondition(_) => 3,
            CliError::Io(_) => 4,
            CliError::Other(_) => 1,
        }
    }
}

impl From<SphereError> for CliError {
    fn from(e: SphereError) -> Self {
        match e {
            SphereError::Domain(_)
            | SphereError::Size(_)
            | SphereError::Precondition(_)
            | SphereError::Structure { .. } => CliError::Precondition(e.to_string()),
            _ => CliError::Other(e.to_string()),
        }
    }
}

impl From<SfunError> for CliError {
    fn from(e: SfunError) -> Self {
        CliError::Io(e.to_string())
    }
}
