//! CLI-level errors, wrapping the library error with configuration and
//! replay failures.

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] isoprune_core::Error),
    #[error("config {path}: {detail}")]
    Config { path: PathBuf, detail: String },
    #[error("invalid value for {field}: {detail}")]
    Flag { field: &'static str, detail: String },
    #[error("data directory not set: pass --data-dir or set ISOPRUNE_DATA_DIR")]
    DataDirMissing,
    #[error("manifest {path}: {detail}")]
    Manifest { path: PathBuf, detail: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;
