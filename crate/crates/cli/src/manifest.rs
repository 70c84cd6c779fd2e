use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use chrono::{SecondsFormat, Utc};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use cprlab_core::session::write_atomic;

/// Record of one CLI invocation. Everything except the timestamps is a
/// pure function of the inputs and the effective configuration.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub config: Value,
    pub seeds: BTreeMap<String, u64>,
    pub input_paths: Vec<String>,
    pub output_paths: Vec<String>,
    /// Command-specific results, e.g. the training history.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub results: BTreeMap<String, Value>,
    pub tool_version: String,
    pub started_at: String,
    pub finished_at: String,
}

pub fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of the command, effective config and seeds. serde_json maps are
/// ordered, so the serialization is canonical.
pub fn config_hash(command: &str, config: &Value, seeds: &BTreeMap<String, u64>) -> String {
    let doc = serde_json::json!({ "command": command, "config": config, "seeds": seeds });
    sha256_hex(doc.to_string().as_bytes())
}

/// Recursively overlays `patch` onto `base`.
pub fn merge_json(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                merge_json(b.entry(k).or_insert(Value::Null), v);
            }
        }
        (b, p) => *b = p,
    }
}

/// Tracks files written by a command so a failure can remove them again.
#[derive(Debug, Default)]
pub struct Outputs {
    written: Vec<PathBuf>,
}

impl Outputs {
    pub fn write(&mut self, path: &Path, bytes: &[u8]) -> Result<()> {
        write_atomic(path, bytes)?;
        self.written.push(path.to_path_buf());
        Ok(())
    }

    pub fn paths(&self) -> Vec<String> {
        self.written.iter().map(|p| p.display().to_string()).collect()
    }

    pub fn rollback(&self) {
        for p in &self.written {
            let _ = fs::remove_file(p);
        }
    }
}

pub struct ManifestBuilder {
    command: String,
    config: Value,
    seeds: BTreeMap<String, u64>,
    inputs: Vec<String>,
    started_at: String,
    results: BTreeMap<String, Value>,
}

impl ManifestBuilder {
    pub fn new(command: &str, config: Value, seeds: BTreeMap<String, u64>, inputs: &[PathBuf]) -> Self {
        Self {
            command: command.into(),
            config,
            seeds,
            inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
            started_at: now(),
            results: BTreeMap::new(),
        }
    }

    pub fn result(&mut self, key: &str, value: Value) {
        self.results.insert(key.into(), value);
    }

    /// Writes the manifest to `path`, listing every recorded output.
    pub fn finish(self, path: &Path, outputs: &mut Outputs) -> Result<PathBuf> {
        let path = path.to_path_buf();
        let mut listed = outputs.paths();
        listed.push(path.display().to_string());
        let m = RunManifest {
            config_hash: config_hash(&self.command, &self.config, &self.seeds),
            command: self.command,
            config: self.config,
            seeds: self.seeds,
            input_paths: self.inputs,
            output_paths: listed,
            results: self.results,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            started_at: self.started_at,
            finished_at: now(),
        };
        let json = serde_json::to_string_pretty(&m).context("serializing manifest")?;
        outputs.write(&path, json.as_bytes())?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_overrides_leaves() {
        let mut base = serde_json::json!({"a": 1, "b": {"c": 2, "d": 3}});
        merge_json(&mut base, serde_json::json!({"b": {"d": 4}, "e": 5}));
        assert_eq!(base, serde_json::json!({"a": 1, "b": {"c": 2, "d": 4}, "e": 5}));
    }

    #[test]
    fn hash_ignores_nothing_but_timestamps() {
        let seeds: BTreeMap<String, u64> = [("seed".to_string(), 7)].into();
        let cfg = serde_json::json!({"x": 1});
        let h1 = config_hash("train", &cfg, &seeds);
        assert_eq!(h1, config_hash("train", &cfg, &seeds));
        assert_ne!(h1, config_hash("train", &serde_json::json!({"x": 2}), &seeds));
        assert_eq!(h1.len(), 64);
    }
}
