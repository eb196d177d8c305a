use std::path::Path;

use thiserror::Error;
use topowork_core::Error as CoreError;

/// Failure of a CLI run, mapped onto the process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flag value or combination; names the offending flag.
    #[error("{0}")]
    Usage(String),
    /// The gap closes somewhere the computation needs it open.
    #[error("gap closure: {0}")]
    Degenerate(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Degenerate(_) => 3,
            CliError::Input(_) | CliError::Io(_) | CliError::Numerical(_) => 1,
        }
    }

    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    pub fn input(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Input(format!("{}: {e}", path.display()))
    }

    pub fn usage(flag: &str, message: impl std::fmt::Display) -> Self {
        CliError::Usage(format!("invalid value for {flag}: {message}"))
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Degenerate { .. } => CliError::Degenerate(e.to_string()),
            CoreError::RefineGrid { .. } | CoreError::ZeroOverlap { .. } => {
                CliError::usage("--grid", format!("{e}; use a finer grid"))
            }
            CoreError::InvalidArgument(msg) => CliError::Usage(msg),
            CoreError::VelocityBound { .. } | CoreError::PolePatch { .. } => {
                CliError::Numerical(e.to_string())
            }
        }
    }
}
