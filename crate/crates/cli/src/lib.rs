//! Experiment harness and I/O around the `zakotfs` library: config-driven
//! simulations and offline processing of recorded IQ captures.

pub mod config;
pub mod experiments;
pub mod iq;

use thiserror::Error;

/// Errors surfaced by the harness; each maps to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(String),

    #[error("sync failure: {0}")]
    Sync(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    /// Exit codes: 2 config/I-O, 3 sync failure, 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Sync(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}
