//! Artifact bundles: named files plus a JSON manifest carrying the config
//! echo, the tool version and SHA-256 content hashes.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{Result, TaucError};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Default)]
pub struct BundleBuilder {
    files: BTreeMap<String, Vec<u8>>,
    summary: Map<String, Value>,
}

impl BundleBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, contents: impl Into<Vec<u8>>) {
        self.files.insert(name.into(), contents.into());
    }

    pub fn summarize(&mut self, key: impl Into<String>, value: Value) {
        self.summary.insert(key.into(), value);
    }

    pub fn finish(self, kind: &str, config: Value) -> Bundle {
        let hashes: BTreeMap<&String, String> = self.files.iter().map(|(k, v)| (k, hex::encode(Sha256::digest(v)))).collect();
        let manifest = json!({
            "tool": "tauc",
            "version": env!("CARGO_PKG_VERSION"),
            "kind": kind,
            "config": config,
            "files": hashes,
            "summary": Value::Object(self.summary),
        });
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        Bundle { files: self.files, manifest: text }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bundle {
    pub files: BTreeMap<String, Vec<u8>>,
    pub manifest: String,
}

impl Bundle {
    pub fn file(&self, name: &str) -> Option<&[u8]> {
        self.files.get(name).map(Vec::as_slice)
    }

    pub fn manifest_hash(&self) -> String {
        hex::encode(Sha256::digest(self.manifest.as_bytes()))
    }

    /// Writes every file, then the manifest, each via temp-file-and-rename.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| TaucError::io(dir, e))?;
        for (name, data) in &self.files {
            write_atomic(&dir.join(name), data)?;
        }
        write_atomic(&dir.join(MANIFEST_NAME), self.manifest.as_bytes())
    }
}

pub fn write_atomic(path: &Path, data: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| TaucError::io(dir, e))?;
    tmp.write_all(data).and_then(|_| tmp.as_file().sync_all()).map_err(|e| TaucError::io(tmp.path(), e))?;
    // Temp files start out owner-only; outputs should be ordinary files.
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file().set_permissions(std::fs::Permissions::from_mode(0o644)).map_err(|e| TaucError::io(tmp.path(), e))?;
    }
    tmp.persist(path).map_err(|e| TaucError::io(path, e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_lists_hashes_and_is_stable() {
        let build = || {
            let mut b = BundleBuilder::new();
            b.add("b.csv", "x\n");
            b.add("a.csv", "y\n");
            b.summarize("score", json!(1.5));
            b.finish("test", json!({"seed": 1}))
        };
        let one = build();
        assert_eq!(one, build());
        let v: Value = serde_json::from_str(&one.manifest).unwrap();
        assert_eq!(v["files"]["a.csv"].as_str().unwrap().len(), 64);
        assert_eq!(v["config"]["seed"], 1);

        let dir = tempfile::tempdir().unwrap();
        one.write_to(dir.path()).unwrap();
        assert_eq!(std::fs::read(dir.path().join("b.csv")).unwrap(), b"x\n");
        assert!(dir.path().join(MANIFEST_NAME).exists());
        let leftovers = std::fs::read_dir(dir.path()).unwrap().count();
        assert_eq!(leftovers, 3);
    }
}
