use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::{CliError, OUTPUT_ROOT_VAR};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskVerdict {
    Pass,
    Fail,
    /// Informational task with no pass criterion.
    Info,
}

impl TaskVerdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            TaskVerdict::Pass
        } else {
            TaskVerdict::Fail
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub name: String,
    pub verdict: TaskVerdict,
    pub metrics: BTreeMap<String, Value>,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// SHA-256 of the canonical JSON of the effective configuration.
    pub config_hash: String,
    pub seed: u64,
    pub tasks: Vec<TaskRecord>,
}

pub fn config_hash<T: Serialize>(cfg: &T) -> Result<String, CliError> {
    let bytes = serde_json::to_vec(cfg).map_err(nsreg::Error::from)?;
    let digest = Sha256::digest(&bytes);
    let mut s = String::with_capacity(64);
    for b in digest.iter() {
        write!(s, "{b:02x}").expect("writing to a String");
    }
    Ok(s)
}

impl RunReport {
    pub fn new<T: Serialize>(command: &str, cfg: &T, seed: u64) -> Result<Self, CliError> {
        Ok(Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config_hash: config_hash(cfg)?,
            seed,
            tasks: Vec::new(),
        })
    }

    /// Runs `f`, timing it and recording its verdict and metrics.
    pub fn task<F>(&mut self, name: &str, f: F) -> Result<TaskVerdict, CliError>
    where
        F: FnOnce(&mut BTreeMap<String, Value>) -> Result<TaskVerdict, CliError>,
    {
        let start = Instant::now();
        let mut metrics = BTreeMap::new();
        let verdict = f(&mut metrics)?;
        self.tasks.push(TaskRecord {
            name: name.into(),
            verdict,
            metrics,
            wall_seconds: start.elapsed().as_secs_f64(),
        });
        Ok(verdict)
    }

    pub fn passed(&self) -> bool {
        self.tasks.iter().all(|t| t.verdict != TaskVerdict::Fail)
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let path = dir.join("report.json");
        nsreg::io::atomic_write_json(&path, self)?;
        Ok(path)
    }
}

/// Resolves the output directory: absolute paths are kept, relative ones
/// are joined to the output root (the environment variable, else the
/// working directory). Without a configured directory, runs land in
/// `runs/<command>-<hash prefix>`.
pub fn output_dir(configured: Option<&Path>, command: &str, hash: &str) -> Result<PathBuf, CliError> {
    let root = std::env::var_os(OUTPUT_ROOT_VAR).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."));
    let dir = match configured {
        Some(p) if p.is_absolute() => p.to_path_buf(),
        Some(p) => root.join(p),
        None => root.join("runs").join(format!("{}-{}", command.replace(' ', "-"), &hash[..12])),
    };
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

pub fn json<T: Serialize>(v: T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = config_hash(&serde_json::json!({"a": 1})).unwrap();
        assert_eq!(a, config_hash(&serde_json::json!({"a": 1})).unwrap());
        assert_ne!(a, config_hash(&serde_json::json!({"a": 2})).unwrap());
        assert_eq!(a.len(), 64);
    }

    #[test]
    fn failed_task_fails_report() {
        let mut r = RunReport::new("x", &1, 0).unwrap();
        r.task("ok", |_| Ok(TaskVerdict::Info)).unwrap();
        assert!(r.passed());
        r.task("bad", |m| {
            m.insert("v".into(), json(1.5));
            Ok(TaskVerdict::Fail)
        })
        .unwrap();
        assert!(!r.passed());
    }
}
