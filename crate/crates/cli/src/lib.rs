//! Front end for the `fedpt` binary: config parsing, the four subcommands,
//! and atomic output.

pub mod app;
pub mod commands;
pub mod config;
pub mod output;

use fedpt_core::FedError;
use thiserror::Error;

/// Failure of a CLI invocation, split by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad invocation, unreadable or invalid config. Exit code 1.
    #[error("{0}")]
    Config(String),
    /// The run itself failed (divergence, I/O while writing). Exit code 2.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }

    /// Stable tag used in the `error[<tag>]:` stderr prefix.
    pub fn tag(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Runtime(_) => "runtime",
        }
    }
}

impl From<FedError> for CliError {
    fn from(e: FedError) -> Self {
        match e {
            FedError::Config(msg) => CliError::Config(msg),
            other => CliError::Runtime(other.to_string()),
        }
    }
}
