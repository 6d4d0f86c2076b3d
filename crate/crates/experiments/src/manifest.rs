// SPDX-License-Identifier: MIT OR Apache-2.0

//! Run directories and their manifests.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: String,
    pub seeds: BTreeMap<String, u64>,
    pub config: Value,
    pub config_digest: String,
    pub artifacts: Vec<Artifact>,
    /// Summary numbers. Timings live here, never in CSV files.
    pub metrics: BTreeMap<String, Value>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))
    }

    pub fn csv_hashes(&self) -> BTreeMap<&str, &str> {
        self.artifacts
            .iter()
            .filter(|a| a.path.ends_with(".csv"))
            .map(|a| (a.path.as_str(), a.sha256.as_str()))
            .collect()
    }

    pub fn metric_f64(&self, key: &str) -> Option<f64> {
        self.metrics.get(key).and_then(Value::as_f64)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Canonical digest of a config value.
pub fn config_digest(config: &Value) -> String {
    sha256_hex(serde_json::to_string(config).expect("values serialize").as_bytes())
}

/// Output directory that records every file it writes.
pub struct RunDir {
    root: PathBuf,
    manifest: RunManifest,
}

impl RunDir {
    pub fn create(root: &Path, experiment: &str, config: Value) -> Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            manifest: RunManifest {
                experiment: experiment.to_owned(),
                seeds: BTreeMap::new(),
                config_digest: config_digest(&config),
                config,
                artifacts: Vec::new(),
                metrics: BTreeMap::new(),
            },
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn seed(&mut self, name: &str, seed: u64) {
        self.manifest.seeds.insert(name.to_owned(), seed);
    }

    pub fn metric(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("metric serializes");
        self.manifest.metrics.insert(key.to_owned(), v);
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes)?;
        self.manifest.artifacts.retain(|a| a.path != name);
        self.manifest.artifacts.push(Artifact {
            path: name.to_owned(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        self.write_bytes(name, text.as_bytes())
    }

    /// Writes a CSV with the given header; values are emitted with `Display`.
    pub fn write_csv<R, I>(&mut self, name: &str, header: &[&str], rows: I) -> Result<()>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator,
        R::Item: ToString,
    {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for row in rows {
            let rec: Vec<String> = row.into_iter().map(|v| v.to_string()).collect();
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        self.write_bytes(name, &bytes)
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let text = serde_json::to_string_pretty(value)? + "\n";
        self.write_text(name, &text)
    }

    /// Writes `manifest.json` and returns the manifest.
    pub fn finish(self) -> Result<RunManifest> {
        let text = serde_json::to_string_pretty(&self.manifest)? + "\n";
        fs::write(self.root.join(MANIFEST_FILE), text)?;
        Ok(self.manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_hashes_and_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let mut run = RunDir::create(dir.path(), "demo", serde_json::json!({"a": 1})).unwrap();
        run.seed("main", 7);
        run.write_csv("t.csv", &["x", "y"], [[1.5, 2.0], [3.0, -0.25]]).unwrap();
        run.metric("acc", 0.5);
        let m = run.finish().unwrap();
        assert_eq!(fs::read_to_string(dir.path().join("t.csv")).unwrap(), "x,y\n1.5,2\n3,-0.25\n");
        let back = RunManifest::load(&dir.path().join(MANIFEST_FILE)).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.csv_hashes().len(), 1);
        assert_eq!(back.metric_f64("acc"), Some(0.5));
    }
}
