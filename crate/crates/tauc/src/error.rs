use std::path::PathBuf;

use tauc_core::{AttenuationError, EstimationError, FisherError, NoiseError, SequenceError};
use thiserror::Error;

/// A configuration problem tied to one field.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{field}: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self { field: field.into(), message: message.into() }
    }
}

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: line {line}, column {column}: {reason}")]
    Parse { path: String, line: u64, column: usize, reason: String },
    #[error("{path}: {reason}")]
    Schema { path: String, reason: String },
}

#[derive(Debug, Error)]
pub enum TaucError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("data error: {0}")]
    Data(#[from] DataError),
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl TaucError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        TaucError::Io { path: path.into(), source }
    }

    /// Process exit status: 2 config, 3 data or IO, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            TaucError::Config(_) => 2,
            TaucError::Data(_) | TaucError::Io { .. } => 3,
            TaucError::Numerical(_) => 4,
        }
    }
}

macro_rules! numerical_from {
    ($($t:ty),*) => {
        $(impl From<$t> for TaucError {
            fn from(e: $t) -> Self {
                TaucError::Numerical(e.to_string())
            }
        })*
    };
}

numerical_from!(EstimationError, FisherError, AttenuationError, NoiseError, SequenceError);

pub type Result<T, E = TaucError> = std::result::Result<T, E>;
