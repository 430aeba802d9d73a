//! Run manifests: every output directory records the exact command,
//! input hashes, seeds, and schema/lexicon versions that produced it.
//! Identical manifests (timestamp aside) imply identical outputs.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub config_hash: Option<String>,
    pub input_hashes: BTreeMap<String, String>,
    pub seeds: Vec<u64>,
    pub schema_version: u32,
    pub lexicon_hashes: Vec<String>,
    pub created_unix: u64,
}

impl RunManifest {
    pub fn new(command_line: Vec<String>) -> RunManifest {
        RunManifest {
            command_line,
            config_hash: None,
            input_hashes: BTreeMap::new(),
            seeds: Vec::new(),
            schema_version: judgekit_core::features::SCHEMA_VERSION,
            lexicon_hashes: judgekit_core::linguistic::Lexicons::builtin().hashes.clone(),
            created_unix: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }

    pub fn hash_input(&mut self, path: &Path) -> std::io::Result<()> {
        let bytes = std::fs::read(path)?;
        self.input_hashes.insert(
            path.display().to_string(),
            hex::encode(Sha256::digest(&bytes)),
        );
        Ok(())
    }

    pub fn set_config_bytes(&mut self, bytes: &[u8]) {
        self.config_hash = Some(hex::encode(Sha256::digest(bytes)));
    }

    /// Write `manifest.json` into the output directory.
    pub fn write(&self, out_dir: &Path) -> std::io::Result<()> {
        let body = serde_json::to_string_pretty(
            &serde_json::to_value(self).expect("manifest serializes"),
        )
        .expect("manifest canonicalizes");
        std::fs::write(out_dir.join("manifest.json"), body + "\n")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_records_inputs_and_writes() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("input.txt");
        std::fs::write(&input, b"data").unwrap();
        let mut manifest = RunManifest::new(vec!["judgekit".into(), "synth".into()]);
        manifest.hash_input(&input).unwrap();
        manifest.set_config_bytes(b"{}");
        manifest.seeds = vec![1, 2];
        manifest.write(dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("manifest.json")).unwrap();
        let parsed: RunManifest = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed.seeds, vec![1, 2]);
        assert_eq!(parsed.input_hashes.len(), 1);
        assert!(parsed.config_hash.is_some());
    }
}
