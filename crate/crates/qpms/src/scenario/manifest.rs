//! Run manifests: every emitted file, hashed, so a re-run can be checked
//! for bit-identical outputs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;

/// Digest record of one emitted file.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct FileDigest {
    /// Path relative to the run directory, with `/` separators.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// What a run produced: identity, provenance, and the hashed file list.
///
/// The file list is sorted by path and excludes the manifest itself; on a
/// deterministic scenario a re-run reproduces every digest (the timestamp
/// lives only here, outside the hashed set).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub scenario_name: String,
    /// SHA-256 of the resolved `scenario.json` as written.
    pub scenario_hash: String,
    pub tool_version: String,
    pub created_unix_seconds: u64,
    pub files: Vec<FileDigest>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Serialized output writer: every file goes through here, so the manifest
/// is complete and ordered regardless of which thread computed the data.
#[derive(Debug)]
pub struct Collector {
    root: PathBuf,
    files: BTreeMap<String, FileDigest>,
}

impl Collector {
    pub fn new(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root)?;
        Ok(Collector {
            root: root.to_path_buf(),
            files: BTreeMap::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Write one file under the run directory and record its digest.
    /// `rel_path` uses `/` separators on every platform.
    pub fn write(&mut self, rel_path: &str, bytes: &[u8]) -> Result<()> {
        let full: PathBuf = self.root.join(rel_path.replace('/', std::path::MAIN_SEPARATOR_STR));
        if let Some(parent) = full.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&full, bytes)?;
        self.files.insert(
            rel_path.to_string(),
            FileDigest {
                path: rel_path.to_string(),
                sha256: sha256_hex(bytes),
                bytes: bytes.len() as u64,
            },
        );
        Ok(())
    }

    /// Finalize: write `manifest.json` (not itself listed) and return it.
    pub fn into_manifest(self, scenario_name: &str, scenario_hash: &str) -> Result<RunManifest> {
        let manifest = RunManifest {
            scenario_name: scenario_name.to_string(),
            scenario_hash: scenario_hash.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            created_unix_seconds: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            files: self.files.into_values().collect(),
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        std::fs::write(self.root.join("manifest.json"), text)?;
        Ok(manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collector_hashes_and_sorts_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = Collector::new(dir.path()).unwrap();
        c.write("b/later.csv", b"2\n").unwrap();
        c.write("a/first.csv", b"1\n").unwrap();
        let manifest = c.into_manifest("demo", "deadbeef").unwrap();
        assert_eq!(manifest.files.len(), 2);
        assert_eq!(manifest.files[0].path, "a/first.csv");
        assert_eq!(manifest.files[1].path, "b/later.csv");
        assert_eq!(manifest.files[0].bytes, 2);
        assert_eq!(manifest.files[0].sha256.len(), 64);
        assert!(dir.path().join("manifest.json").exists());
        assert!(dir.path().join("a/first.csv").exists());
        // identical content -> identical digest
        assert_eq!(sha256_hex(b"1\n"), manifest.files[0].sha256);
    }
}
