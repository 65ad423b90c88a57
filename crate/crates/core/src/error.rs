//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by corpus handling, model training, and search.
#[derive(Debug, Error)]
pub enum Error {
    /// A corpus or model file could not be read or written.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A line of a JSONL file failed to parse.
    #[error("{file}:{line}: malformed record: {message}")]
    ParseLine {
        file: String,
        line: usize,
        message: String,
    },

    /// A JSON document (config or model file) failed to parse.
    #[error("malformed JSON in {path}: {message}")]
    ParseJson { path: PathBuf, message: String },

    /// A configuration value is out of range or inconsistent.
    #[error("config error: {key}: {message}")]
    Config { key: String, message: String },

    /// Loaded data violates a corpus invariant.
    #[error("corpus validation failed: {}", summary(.violations))]
    Validation { violations: Vec<String> },

    /// An id does not exist in the corpus or model.
    #[error("unknown {kind} id {id}")]
    Lookup { kind: &'static str, id: String },

    /// An operation was called with invalid input.
    #[error("invalid input: {0}")]
    Input(String),

    /// A non-finite value was encountered where a finite one is required.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Training could not proceed on the given data.
    #[error("training error: {0}")]
    Training(String),

    /// No vertical returned any result for a query.
    #[error("no results in any vertical for the query")]
    NoResults,

    /// A required model artifact is absent.
    #[error("missing model file {path}: {hint}")]
    MissingModel { path: PathBuf, hint: String },
}

fn summary(violations: &[String]) -> String {
    let shown: Vec<&str> = violations.iter().take(3).map(String::as_str).collect();
    if violations.len() > 3 {
        format!("{} (+{} more)", shown.join("; "), violations.len() - 3)
    } else {
        shown.join("; ")
    }
}

pub type Result<T> = std::result::Result<T, Error>;
