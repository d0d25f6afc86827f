//! Configuration, run directories and the build/verify/export pipeline behind the `forge` binary.

pub mod config;
pub mod run;

/// Failures surfaced by the pipeline, each with its process exit code.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    /// Bad configuration, unreadable or missing files, or an out-of-range size.
    #[error("{0}")]
    Input(String),
    /// The construction stopped at `step` (0 when it failed before the first step).
    #[error("{message}")]
    Forge { step: usize, message: String },
    /// The basis was built or loaded but failed verification.
    #[error("verification failed: {0}")]
    Audit(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Forge { .. } => 3,
            CliError::Audit(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Input(_) => "input",
            CliError::Forge { .. } => "forge",
            CliError::Audit(_) => "audit",
        }
    }
}
