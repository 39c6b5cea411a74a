//! CLI error taxonomy, one variant per process exit code.

use driftwalk_core::Error as CoreError;

/// Errors surfaced by the command-line layer.  The process exit code is
/// derived from the variant: configuration problems exit 2, budget refusals
/// exit 3, runtime failures exit 4.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("budget refusal: estimated {estimate} events exceed the budget of {budget}")]
    Budget { estimate: u64, budget: u64 },
    #[error("runtime error: {0}")]
    Run(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Budget { .. } => 3,
            CliError::Run(_) => 4,
        }
    }

    /// Wraps a core error, attaching a coordinate such as
    /// "environment 3 (seed 42), replica 7".
    pub fn at(context: &str, e: CoreError) -> Self {
        match e {
            CoreError::Config(msg) => CliError::Config(format!("{context}: {msg}")),
            other => CliError::Run(format!("{context}: {other}")),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Config(msg) => CliError::Config(msg),
            other => CliError::Run(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Run(format!("i/o failure: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Run(format!("csv emission failed: {e}"))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
