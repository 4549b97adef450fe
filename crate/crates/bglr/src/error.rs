//! Error type shared by the file formats and the command line.

use std::path::PathBuf;

use bglr_core::fit::FitError;
use bglr_core::pipeline::PipelineError;
use bglr_core::GldError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    /// `row` is the 1-based line in the file, header included.
    #[error("{path}: row {row}{}: {message}", column.as_ref().map(|c| format!(", column {c}")).unwrap_or_default())]
    Parse { path: PathBuf, row: usize, column: Option<String>, message: String },
    #[error("{path}: {message}")]
    Schema { path: PathBuf, message: String },
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Gld(#[from] GldError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("{0}")]
    Numeric(String),
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
}

impl Error {
    /// 2 for usage and configuration mistakes, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) | Self::Config { .. } => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
