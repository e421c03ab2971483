use std::path::PathBuf;

use thiserror::Error;

/// Input and environment errors; every variant exits with status 2.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot parse {}: {message}", path.display())]
    Parse { path: PathBuf, message: String },

    #[error("config error at `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] ifmfix::Error),
}
