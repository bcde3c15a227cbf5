//! Per-run provenance written next to each command's outputs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::Config;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub processed: usize,
    pub succeeded: usize,
    pub rejected: BTreeMap<String, usize>,
}

impl Counts {
    pub fn reject(&mut self, reason: impl Into<String>) {
        *self.rejected.entry(reason.into()).or_default() += 1;
    }

    pub fn is_closed(&self) -> bool {
        self.processed == self.succeeded + self.rejected.values().sum::<usize>()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    /// Relative to the report's directory where possible.
    pub path: String,
    /// Digest of the file; for JSON Lines inputs, per-record `created_at`
    /// stamps are removed first so reruns hash equal.
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub config_sha256: String,
    pub config: BTreeMap<String, String>,
    pub inputs: Vec<InputDigest>,
    pub counts: Counts,
    pub outputs: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub results: Option<serde_json::Value>,
    pub started_at: DateTime<Utc>,
    pub wall_time_ms: u64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    Ok(sha256_hex(&bytes))
}

pub fn input_sha256(path: &Path) -> Result<String> {
    if path.extension().is_none_or(|e| e != "jsonl") {
        return file_sha256(path);
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    let mut hasher = Sha256::new();
    for line in text.lines() {
        match serde_json::from_str::<serde_json::Value>(line) {
            Ok(serde_json::Value::Object(mut m)) => {
                m.remove("created_at");
                hasher.update(serde_json::to_vec(&m).expect("object serializes"));
            }
            _ => hasher.update(line.as_bytes()),
        }
        hasher.update(b"\n");
    }
    Ok(hex::encode(hasher.finalize()))
}

pub fn config_sha256(cfg: &Config) -> String {
    sha256_hex(&serde_json::to_vec(cfg.values()).expect("string map serializes"))
}

/// `target` relative to the directory `base`, with forward slashes. Falls
/// back to `target` unchanged when no relative form exists.
pub fn relative_to(target: &Path, base: &Path) -> String {
    let abs = |p: &Path| std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf());
    let (t, b) = (abs(target), abs(base));
    let rel = pathdiff::diff_paths(&t, &b).unwrap_or(t);
    let s = rel.to_string_lossy().replace('\\', "/");
    if s.is_empty() { ".".into() } else { s }
}

pub struct ReportBuilder {
    command: String,
    config: Config,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    pub counts: Counts,
    pub results: Option<serde_json::Value>,
    started_at: DateTime<Utc>,
    clock: std::time::Instant,
}

impl ReportBuilder {
    pub fn new(command: &str, config: &Config) -> Self {
        Self {
            command: command.to_string(),
            config: config.clone(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            counts: Counts::default(),
            results: None,
            started_at: Utc::now(),
            clock: std::time::Instant::now(),
        }
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    pub fn finish(self, report_path: &Path) -> Result<RunReport> {
        let dir = report_path.parent().unwrap_or(Path::new("."));
        let inputs = self
            .inputs
            .iter()
            .map(|p| {
                Ok(InputDigest {
                    path: relative_to(p, dir),
                    sha256: input_sha256(p)?,
                })
            })
            .collect::<Result<_>>()?;
        debug_assert!(self.counts.is_closed());
        let report = RunReport {
            command: self.command,
            config_sha256: config_sha256(&self.config),
            config: self.config.values().clone(),
            inputs,
            counts: self.counts,
            outputs: self.outputs.iter().map(|p| relative_to(p, dir)).collect(),
            results: self.results,
            started_at: self.started_at,
            wall_time_ms: self.clock.elapsed().as_millis() as u64,
        };
        let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
        text.push('\n');
        std::fs::write(report_path, text).map_err(|e| Error::io(format!("writing {}", report_path.display()), e))?;
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_and_paths() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
        assert_eq!(relative_to(Path::new("/a/b/c.txt"), Path::new("/a")), "b/c.txt");
        assert_eq!(relative_to(Path::new("/a/x"), Path::new("/a/b")), "../x");
    }
}
