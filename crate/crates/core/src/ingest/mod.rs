//! Parsing of normalized per-project event logs and holder-balance folds.

mod format;
mod holders;

pub use format::{
    parse_trace, parse_trace_str, parse_trace_with, serialize_trace, write_trace, IngestOptions, TRACE_EXTENSION,
};
pub use holders::{derive_holder_snapshot, HolderError, HolderSnapshot};

use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::model::ModelError;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("line {line}: timestamp regresses by {regression_secs}s, beyond tolerance")]
    Order { line: usize, regression_secs: i64 },
    #[error("invalid trace: {0}")]
    Invalid(#[from] ModelError),
}
