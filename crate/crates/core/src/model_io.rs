//! JSON (de)serialization helpers shared by all model artifacts.

use std::fs;
use std::io::ErrorKind;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

/// Writes a model as pretty JSON, creating parent directories as needed.
pub fn save_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|source| Error::Io {
                path: parent.to_path_buf(),
                source,
            })?;
        }
    }
    let mut body = serde_json::to_string_pretty(value).map_err(|e| Error::ParseJson {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    body.push('\n');
    fs::write(path, body).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes records as JSON lines, creating parent directories as needed.
pub fn save_jsonl<T: Serialize>(records: &[T], path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|source| Error::Io {
                path: parent.to_path_buf(),
                source,
            })?;
        }
    }
    let mut body = String::new();
    for rec in records {
        body.push_str(&serde_json::to_string(rec).map_err(|e| Error::ParseJson {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?);
        body.push('\n');
    }
    fs::write(path, body).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads JSON lines; parse failures report the file and 1-based line.
/// A missing file becomes a `MissingModel` error carrying `hint`.
pub fn load_jsonl<T: DeserializeOwned>(path: &Path, hint: &str) -> Result<Vec<T>> {
    let body = fs::read_to_string(path).map_err(|source| {
        if source.kind() == ErrorKind::NotFound {
            Error::MissingModel {
                path: path.to_path_buf(),
                hint: hint.to_string(),
            }
        } else {
            Error::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    })?;
    let mut records = Vec::new();
    for (idx, line) in body.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(line).map_err(|e| Error::ParseLine {
            file: path.display().to_string(),
            line: idx + 1,
            message: e.to_string(),
        })?);
    }
    Ok(records)
}

/// Reads a JSON model file. A missing file becomes a `MissingModel` error
/// carrying `hint`, so callers can name the pipeline stage that produces it.
pub fn load_json<T: DeserializeOwned>(path: &Path, hint: &str) -> Result<T> {
    let body = fs::read_to_string(path).map_err(|source| {
        if source.kind() == ErrorKind::NotFound {
            Error::MissingModel {
                path: path.to_path_buf(),
                hint: hint.to_string(),
            }
        } else {
            Error::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    })?;
    serde_json::from_str(&body).map_err(|e| Error::ParseJson {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}
