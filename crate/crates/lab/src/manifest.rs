//! Experiment manifests: a run is fully described by (kind, parameters,
//! seed), and its outputs live in a directory namespaced by the manifest
//! hash so no experiment can clobber another's results.

use std::collections::BTreeMap;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentManifest {
    pub kind: String,
    pub version: String,
    pub seed: u64,
    pub threads: usize,
    /// Full echo of the effective configuration.
    pub params: BTreeMap<String, String>,
    /// Content hash of (kind, params, seed); identifies the run.
    pub manifest_hash: String,
    /// Output files, relative to the run directory.
    pub outputs: Vec<String>,
}

impl ExperimentManifest {
    pub fn new(
        kind: &str,
        seed: u64,
        threads: usize,
        params: BTreeMap<String, String>,
    ) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(kind.as_bytes());
        hasher.update([0]);
        hasher.update(seed.to_le_bytes());
        for (k, v) in &params {
            hasher.update(k.as_bytes());
            hasher.update([1]);
            hasher.update(v.as_bytes());
            hasher.update([2]);
        }
        let manifest_hash = hex(&hasher.finalize());
        ExperimentManifest {
            kind: kind.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            threads,
            params,
            manifest_hash,
            outputs: Vec::new(),
        }
    }

    pub fn short_hash(&self) -> &str {
        &self.manifest_hash[..12]
    }

    /// Run directory under `base`, created if missing.
    pub fn run_dir(&self, base: &Path) -> io::Result<PathBuf> {
        let dir = base.join(format!("{}-{}", self.kind, self.short_hash()));
        std::fs::create_dir_all(&dir)?;
        Ok(dir)
    }

    pub fn record_output(&mut self, name: &str) {
        self.outputs.push(name.to_string());
    }

    /// Serialize the manifest itself into the run directory.
    pub fn write(&self, dir: &Path) -> io::Result<PathBuf> {
        let path = dir.join("manifest.json");
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(&path, json)?;
        Ok(path)
    }
}

fn hex(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        use std::fmt::Write;
        write!(s, "{b:02x}").unwrap();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable_and_sensitive() {
        let mut p = BTreeMap::new();
        p.insert("alpha".to_string(), "0.5".to_string());
        let a = ExperimentManifest::new("dyson", 1, 4, p.clone());
        let b = ExperimentManifest::new("dyson", 1, 4, p.clone());
        assert_eq!(a.manifest_hash, b.manifest_hash);
        let c = ExperimentManifest::new("dyson", 2, 4, p.clone());
        assert_ne!(a.manifest_hash, c.manifest_hash);
        p.insert("t".to_string(), "1".to_string());
        let d = ExperimentManifest::new("dyson", 1, 4, p);
        assert_ne!(a.manifest_hash, d.manifest_hash);
        // thread count must NOT enter the hash: results are thread-invariant
        let e = ExperimentManifest::new("dyson", 1, 8, a.params.clone());
        assert_eq!(a.manifest_hash, e.manifest_hash);
    }
}
