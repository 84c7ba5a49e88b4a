use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FedError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("protocol error: {0}")]
    Protocol(String),
}

impl FedError {
    pub fn config(msg: impl Into<String>) -> Self {
        FedError::Config(msg.into())
    }

    pub fn protocol(msg: impl Into<String>) -> Self {
        FedError::Protocol(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        FedError::Domain(msg.into())
    }

    /// True for errors caused by invalid user input rather than by a run.
    pub fn is_config(&self) -> bool {
        matches!(self, FedError::Config(_))
    }
}

pub type Result<T, E = FedError> = std::result::Result<T, E>;
