//! Experiment harness behind the `gclab` binary: configs, commands and run artifacts.

pub mod artifacts;
pub mod checks;
pub mod commands;
pub mod config;

use thiserror::Error;

use crate::error::{ConstructionError, EncodingError, GroupError, NetworkError};

pub use commands::{run, Outcome};
pub use config::{Experiment, ExperimentConfig};

#[derive(Debug, Error)]
pub enum LabError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error(transparent)]
    Construction(#[from] ConstructionError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
