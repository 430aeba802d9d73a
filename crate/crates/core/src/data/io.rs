//! JSONL ingestion and writing for judgment datasets.
//!
//! One group per line, UTF-8. The loader validates every group against
//! the scale and reports the offending line number on parse failures.

use super::{DataError, Dataset, JudgmentGroup, ScaleSpec};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

/// Load a JSONL dataset and validate it against `scale`.
///
/// Blank lines are ignored, so an empty file yields an empty dataset.
pub fn load_dataset(path: &Path, scale: ScaleSpec) -> Result<Dataset, DataError> {
    let file = std::fs::File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let reader = BufReader::new(file);
    let mut groups = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| DataError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let group: JudgmentGroup =
            serde_json::from_str(&line).map_err(|e| DataError::MalformedLine {
                line: idx + 1,
                message: e.to_string(),
            })?;
        groups.push(group);
    }
    Dataset::new(groups, scale)
}

/// Write a dataset as JSONL, one group per line.
///
/// Output is canonical: loading it back reproduces the dataset exactly,
/// and re-saving the loaded dataset reproduces the bytes.
pub fn save_dataset(dataset: &Dataset, path: &Path) -> Result<(), DataError> {
    let mut out = Vec::new();
    for group in &dataset.groups {
        serde_json::to_writer(&mut out, group).expect("group serializes");
        out.push(b'\n');
    }
    let mut file = std::fs::File::create(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    file.write_all(&out).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })
}
