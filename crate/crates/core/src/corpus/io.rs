//! Corpus persistence: one JSONL file per record stream plus a JSON file
//! for the planted truth. Load re-validates so a corrupted directory is
//! rejected with the offending file and line.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

use super::{validate_corpus, Corpus, DocSet, PlantedTruth};

const MEMBERS: &str = "members.jsonl";
const ENDORSEMENTS: &str = "endorsements.jsonl";
const DOCS_PEOPLE: &str = "docs_people.jsonl";
const DOCS_JOBS: &str = "docs_jobs.jsonl";
const DOCS_CONTENT: &str = "docs_content.jsonl";
const ACTIVITY: &str = "activity.jsonl";
const QUERIES: &str = "queries.jsonl";
const PLANTED: &str = "planted_truth.json";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_jsonl<T: Serialize>(dir: &Path, file: &str, records: &[T]) -> Result<()> {
    let path = dir.join(file);
    let out = fs::File::create(&path).map_err(io_err(&path))?;
    let mut w = BufWriter::new(out);
    for rec in records {
        let line = serde_json::to_string(rec).map_err(|e| Error::ParseJson {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        writeln!(w, "{line}").map_err(io_err(&path))?;
    }
    w.flush().map_err(io_err(&path))?;
    Ok(())
}

fn read_jsonl<T: DeserializeOwned>(dir: &Path, file: &str) -> Result<Vec<T>> {
    let path = dir.join(file);
    let input = fs::File::open(&path).map_err(io_err(&path))?;
    let reader = BufReader::new(input);
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err(&path))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: T = serde_json::from_str(&line).map_err(|e| Error::ParseLine {
            file: file.to_string(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        records.push(rec);
    }
    Ok(records)
}

/// Writes the eight corpus files into `dir`, creating it if needed.
pub fn save_corpus(corpus: &Corpus, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_jsonl(dir, MEMBERS, &corpus.members)?;
    write_jsonl(dir, ENDORSEMENTS, &corpus.endorsements)?;
    write_jsonl(dir, DOCS_PEOPLE, &corpus.docs.people)?;
    write_jsonl(dir, DOCS_JOBS, &corpus.docs.jobs)?;
    write_jsonl(dir, DOCS_CONTENT, &corpus.docs.content)?;
    write_jsonl(dir, ACTIVITY, &corpus.activity)?;
    write_jsonl(dir, QUERIES, &corpus.queries)?;
    let path = dir.join(PLANTED);
    let body = serde_json::to_string_pretty(&corpus.planted).map_err(|e| Error::ParseJson {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    fs::write(&path, body).map_err(io_err(&path))?;
    Ok(())
}

/// Reads a corpus directory and re-validates it. Malformed lines report
/// `file:line`; structural violations are collected into one error.
pub fn load_corpus(dir: &Path) -> Result<Corpus> {
    let members = read_jsonl(dir, MEMBERS)?;
    let endorsements = read_jsonl(dir, ENDORSEMENTS)?;
    let docs = DocSet {
        people: read_jsonl(dir, DOCS_PEOPLE)?,
        jobs: read_jsonl(dir, DOCS_JOBS)?,
        content: read_jsonl(dir, DOCS_CONTENT)?,
    };
    let activity = read_jsonl(dir, ACTIVITY)?;
    let queries = read_jsonl(dir, QUERIES)?;
    let path = dir.join(PLANTED);
    let body = fs::read_to_string(&path).map_err(io_err(&path))?;
    let planted: PlantedTruth = serde_json::from_str(&body).map_err(|e| Error::ParseJson {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;

    let corpus = Corpus::new(members, endorsements, docs, activity, queries, planted);
    let violations = validate_corpus(&corpus);
    if !violations.is_empty() {
        return Err(Error::Validation {
            violations: violations.into_iter().map(|v| v.to_string()).collect(),
        });
    }
    Ok(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_corpus, GeneratorConfig};

    #[test]
    fn save_load_roundtrip_is_identity() {
        let cfg = GeneratorConfig {
            members: 25,
            skills: 8,
            jobs_docs: 15,
            content_docs: 15,
            train_queries: 8,
            eval_queries: 4,
            ..GeneratorConfig::default()
        };
        let corpus = generate_corpus(&cfg, 11).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_corpus(&corpus, dir.path()).unwrap();
        let loaded = load_corpus(dir.path()).unwrap();
        assert_eq!(corpus, loaded);
    }

    #[test]
    fn malformed_line_reports_file_and_line() {
        let cfg = GeneratorConfig {
            members: 5,
            skills: 6,
            jobs_docs: 2,
            content_docs: 2,
            train_queries: 2,
            eval_queries: 1,
            ..GeneratorConfig::default()
        };
        let corpus = generate_corpus(&cfg, 2).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_corpus(&corpus, dir.path()).unwrap();

        let path = dir.path().join("members.jsonl");
        let mut body = std::fs::read_to_string(&path).unwrap();
        body.push_str("{not json\n");
        std::fs::write(&path, body).unwrap();

        let err = load_corpus(dir.path()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("members.jsonl:6"), "got: {msg}");
    }

    #[test]
    fn missing_directory_is_io_error() {
        let err = load_corpus(Path::new("/nonexistent/corpus/dir")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }
}
