//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter combination the algorithms cannot run with.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// A superstep program broke the engine protocol (unequal superstep
    /// counts, out-of-range destination, exceeded superstep budget).
    #[error("protocol violation: {0}")]
    Protocol(String),
    /// Input data violates a precondition (e.g. reserved sentinel key).
    #[error("invalid input: {0}")]
    Input(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Other(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn protocol(msg: impl Into<String>) -> Self {
        Error::Protocol(msg.into())
    }

    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
}
