//! Error types shared across the simulator.

use std::path::PathBuf;

/// Top-level error for every fallible operation in the crate.
#[derive(Debug, thiserror::Error)]
pub enum SimError {
    /// Invalid user-provided configuration (scenario, simplification, CLI).
    #[error("configuration error: {0}")]
    Config(String),

    /// Problems reading or interpreting the channel parameter file.
    #[error("parameter file error: {path}: {message}")]
    Parameter { path: PathBuf, message: String },

    /// A caller violated an internal contract (dimension mismatch, missing
    /// realization, mismatched subcarrier grids).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Timing measurement could not be trusted (resolution too coarse, or a
    /// second profiler instance was already running).
    #[error("profiler error: {0}")]
    Profiler(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serialization(String),
}

impl SimError {
    pub fn config(msg: impl Into<String>) -> Self {
        SimError::Config(msg.into())
    }

    pub fn contract(msg: impl Into<String>) -> Self {
        SimError::Contract(msg.into())
    }

    /// Process exit code category for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            SimError::Config(_) => 2,
            SimError::Parameter { .. } => 3,
            SimError::Contract(_) => 4,
            SimError::Profiler(_) => 5,
            SimError::Io(_) => 6,
            SimError::Serialization(_) => 7,
        }
    }
}

pub type Result<T> = std::result::Result<T, SimError>;
