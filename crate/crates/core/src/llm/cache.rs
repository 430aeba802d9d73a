//! Content-addressed cache of judge-model feature records.
//!
//! The key hashes (template id, rendered prompt, model id), so changing
//! any of the three invalidates the entry. Writes go through a temp file
//! and an atomic rename: concurrent readers never observe torn records.

use super::{LlmError, LlmFeatureRecord};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

/// Cache key for one (template, prompt, model) triple.
pub fn cache_key(template_id: &str, prompt: &str, model_id: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(template_id.as_bytes());
    hasher.update([0]);
    hasher.update(prompt.as_bytes());
    hasher.update([0]);
    hasher.update(model_id.as_bytes());
    hex::encode(hasher.finalize())
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheLine {
    key: String,
    record: LlmFeatureRecord,
}

#[derive(Debug)]
pub struct FeatureCache {
    path: Option<PathBuf>,
    map: Mutex<BTreeMap<String, LlmFeatureRecord>>,
}

impl FeatureCache {
    /// A cache without a backing file; useful for tests and one-shot runs.
    pub fn in_memory() -> FeatureCache {
        FeatureCache {
            path: None,
            map: Mutex::new(BTreeMap::new()),
        }
    }

    /// Open a JSONL-backed cache, creating an empty one if the file does
    /// not exist yet.
    pub fn open(path: &Path) -> Result<FeatureCache, LlmError> {
        let map = if path.exists() {
            read_records(path)?
        } else {
            BTreeMap::new()
        };
        Ok(FeatureCache {
            path: Some(path.to_path_buf()),
            map: Mutex::new(map),
        })
    }

    pub fn len(&self) -> usize {
        self.map.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, key: &str) -> Option<LlmFeatureRecord> {
        self.map.lock().unwrap().get(key).cloned()
    }

    pub fn put(&self, key: String, record: LlmFeatureRecord) {
        self.map.lock().unwrap().insert(key, record);
    }

    /// Persist to the backing file (no-op for in-memory caches).
    pub fn save(&self) -> Result<(), LlmError> {
        match &self.path {
            Some(path) => self.write_to(path),
            None => Ok(()),
        }
    }

    /// Export all records as JSONL, sorted by key; returns the count.
    /// An export/import/export cycle is byte-identical.
    pub fn export(&self, path: &Path) -> Result<usize, LlmError> {
        self.write_to(path)?;
        Ok(self.len())
    }

    /// Merge records from an exported file into this cache.
    pub fn import(&self, path: &Path) -> Result<usize, LlmError> {
        let records = read_records(path)?;
        let count = records.len();
        let mut map = self.map.lock().unwrap();
        for (key, record) in records {
            map.insert(key, record);
        }
        Ok(count)
    }

    fn write_to(&self, path: &Path) -> Result<(), LlmError> {
        let io_err = |source: std::io::Error| LlmError::CacheIo {
            path: path.display().to_string(),
            message: source.to_string(),
        };
        let mut body = Vec::new();
        {
            let map = self.map.lock().unwrap();
            for (key, record) in map.iter() {
                let line = CacheLine {
                    key: key.clone(),
                    record: record.clone(),
                };
                serde_json::to_writer(&mut body, &line).expect("cache line serializes");
                body.push(b'\n');
            }
        }
        let tmp = path.with_extension("tmp");
        let mut file = std::fs::File::create(&tmp).map_err(io_err)?;
        file.write_all(&body).map_err(io_err)?;
        file.sync_all().map_err(io_err)?;
        std::fs::rename(&tmp, path).map_err(io_err)
    }
}

fn read_records(path: &Path) -> Result<BTreeMap<String, LlmFeatureRecord>, LlmError> {
    let file = std::fs::File::open(path).map_err(|e| LlmError::CacheIo {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let mut map = BTreeMap::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| LlmError::CacheIo {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: CacheLine = serde_json::from_str(&line).map_err(|e| LlmError::CacheIo {
            path: path.display().to_string(),
            message: format!("line {}: {e}", idx + 1),
        })?;
        map.insert(parsed.key, parsed.record);
    }
    Ok(map)
}
