//! Newline-delimited JSON reading and writing.

use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::IngestError;

/// Non-blank lines of a file with their 1-based line numbers.
pub fn read_lines(path: &Path) -> Result<Vec<(usize, String)>, IngestError> {
    let text = std::fs::read_to_string(path).map_err(|e| IngestError::io(path, e))?;
    Ok(text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l.to_string()))
        .collect())
}

pub fn parse_record<T: DeserializeOwned>(path: &Path, line: usize, text: &str) -> Result<T, IngestError> {
    serde_json::from_str(text).map_err(|e| IngestError::BadRecord {
        path: path.to_path_buf(),
        line,
        reason: e.to_string(),
    })
}

/// Serialize records one per line, each terminated by `\n`.
pub fn to_string<T: Serialize>(records: &[T]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record types serialize infallibly"));
        out.push('\n');
    }
    out
}

pub fn write_file<T: Serialize>(path: &Path, records: &[T]) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(to_string(records).as_bytes())?;
    f.flush()
}
