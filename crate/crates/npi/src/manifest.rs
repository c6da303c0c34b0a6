//! Run manifests: provenance and results of one invocation.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{render_config, ExperimentConfig, Mode};
use crate::error::{NpiError, Result};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Running,
    Complete,
    Failed,
}

/// Outcome of one sub-run (one bead count, or the single run of a non-sweep mode).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub beads: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature_err: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flux: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flux_err: Option<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub values: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub mode: Mode,
    pub seed: u64,
    /// SHA-256 of the rendered configuration.
    pub config_hash: String,
    /// SHA-256 of the configuration with seed, output and bead list removed;
    /// runs with equal physics hashes may be compared.
    pub physics_hash: String,
    pub started: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finished: Option<String>,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub files: Vec<String>,
    pub results: Vec<SweepResult>,
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn config_hash(cfg: &ExperimentConfig) -> Result<String> {
    let mut c = cfg.clone();
    c.output = None;
    Ok(hex(&Sha256::digest(render_config(&c)?.as_bytes())))
}

pub fn physics_hash(cfg: &ExperimentConfig) -> Result<String> {
    let mut c = cfg.clone();
    c.output = None;
    c.seed = 0;
    c.beads.clear();
    Ok(hex(&Sha256::digest(render_config(&c)?.as_bytes())))
}

/// Per-run seed derived from the master seed and the bead count.
pub fn derive_seed(seed: u64, beads: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(b"npi-seed");
    h.update(seed.to_le_bytes());
    h.update((beads as u64).to_le_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

pub fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

impl RunManifest {
    pub fn begin(cfg: &ExperimentConfig) -> Result<Self> {
        Ok(Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            mode: cfg.mode,
            seed: cfg.seed,
            config_hash: config_hash(cfg)?,
            physics_hash: physics_hash(cfg)?,
            started: timestamp(),
            finished: None,
            status: RunStatus::Running,
            error: None,
            files: Vec::new(),
            results: Vec::new(),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| NpiError::Serialization(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| NpiError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| NpiError::Serialization(format!("{}: {e}", path.display())))
    }
}
