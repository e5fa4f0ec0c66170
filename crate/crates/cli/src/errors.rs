//! Process-level error classification.
//!
//! Exit codes: 0 success, 1 suite failure, 2 configuration error,
//! 3 flow blow-up.

use std::process::ExitCode;

/// Classified command failure; the variant fixes the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad configuration: unknown key, malformed value, missing input.
    Config(String),
    /// A check suite failed, the flow stalled, or an artifact could not
    /// be produced.
    Suite(String),
    /// The flow left the admissible region and was halted.
    Blowup(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::from(2),
            CliError::Suite(_) => ExitCode::from(1),
            CliError::Blowup(_) => ExitCode::from(3),
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Suite(m) | CliError::Blowup(m) => m,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Suite(format!("i/o error: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Suite(format!("json error: {e}"))
    }
}

/// Core errors raised while building lattices, representations, or
/// scenarios are configuration problems.
pub fn setup_err(e: spinflow_core::Error) -> CliError {
    CliError::Config(e.to_string())
}

/// Core errors raised while time-stepping: degenerating geometry is a
/// blow-up, an exhausted step-size guard is a suite failure.
pub fn run_err(e: spinflow_core::Error) -> CliError {
    use spinflow_core::Error as E;
    match e {
        E::FlowBlowup(_) | E::NotPositiveDefinite { .. } => CliError::Blowup(e.to_string()),
        E::FlowStalled { .. } => CliError::Suite(e.to_string()),
        other => CliError::Config(other.to_string()),
    }
}

pub type CliResult<T> = Result<T, CliError>;
