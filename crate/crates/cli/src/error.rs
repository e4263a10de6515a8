use thiserror::Error;

use gossipcalc_core::Error as CoreError;

use crate::config::Violation;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid configuration:\n{}", .0.iter().map(|v| format!("  {v}")).collect::<Vec<_>>().join("\n"))]
    Violations(Vec<Violation>),

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("I/O error: {0}")]
    Io(String),
}

impl CliError {
    /// 2 for configuration problems, 3 for generation or numerical
    /// failures, 4 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Violations(_) => 2,
            CliError::Core(e) => match e {
                CoreError::GenerationFailure(_)
                | CoreError::NumericalFailure(_)
                | CoreError::InvalidState(_)
                | CoreError::AllFailed
                | CoreError::Degenerate(_) => 3,
                _ => 2,
            },
            CliError::Io(_) => 4,
        }
    }
}
