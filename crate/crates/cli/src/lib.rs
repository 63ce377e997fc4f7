//! Library side of the `multiunit` command-line tool. Each command writes its
//! report to a caller-supplied writer so it can be tested without a process.

pub mod commands;
pub mod fleetfile;
pub mod format;

use multiunit_core::Error as CoreError;

pub use fleetfile::FleetFile;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad arguments, unreadable or unwritable paths, structural fleet problems.
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Parse(String),
    /// Infeasible requests and invalid curves.
    #[error("{0}")]
    Infeasible(String),
    /// A computed result failed its own check.
    #[error("{0}")]
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Parse(_) => 2,
            CliError::Infeasible(_) | CliError::Verification(_) => 1,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let msg = e.to_string();
        match e {
            CoreError::NegativeInput(_)
            | CoreError::NotFinite
            | CoreError::InvalidRange { .. }
            | CoreError::InvalidStep { .. }
            | CoreError::OracleUnsupported(_)
            | CoreError::EmptyFleet
            | CoreError::FleetTooLarge(_)
            | CoreError::EmptyUnitId
            | CoreError::DuplicateUnitId(_)
            | CoreError::UnknownUnit(_) => CliError::Usage(msg),
            _ => CliError::Infeasible(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}
