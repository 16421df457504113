//! Run configuration: defaults, then an optional TOML file, then flags.

use std::path::{Path, PathBuf};

use anyhow::Context;
use needaudit::CiMode;
use serde::{Deserialize, Serialize};

use crate::UsageError;

/// Keys accepted in `--config` files. Every key is optional and mirrors the
/// flag of the same name (dashes become underscores).
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub input: Option<PathBuf>,
    pub groups: Option<Vec<u32>>,
    pub covariates: Option<Vec<String>>,
    pub gamma_min: Option<f64>,
    pub gamma_max: Option<f64>,
    pub gamma_step: Option<f64>,
    pub level: Option<f64>,
    pub folds: Option<usize>,
    pub clip: Option<f64>,
    pub l2: Option<f64>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub n_pre: Option<usize>,
    pub n_post: Option<usize>,
    pub gamma_true: Option<f64>,
    pub gamma: Option<f64>,
    pub offsets: Option<Vec<f64>>,
    pub z_column: Option<String>,
    pub quantile: Option<f64>,
    pub mode: Option<CiMode>,
    pub out_dir: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))
            .map_err(|e| UsageError(format!("{e:#}")))?;
        toml::from_str(&text).map_err(|e| UsageError(format!("config file {}: {e}", path.display())).into())
    }
}

pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

pub fn require<T>(flag: Option<T>, file: Option<T>, name: &str) -> anyhow::Result<T> {
    flag.or(file).ok_or_else(|| UsageError(format!("missing required option --{name}")).into())
}

/// Settings shared by every estimation command.
#[derive(Debug, Clone, Serialize)]
pub struct FitSettings {
    pub folds: usize,
    pub clip: f64,
    pub l2: f64,
    pub seed: u64,
    pub level: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditRun {
    pub input: PathBuf,
    pub groups: Option<Vec<u32>>,
    pub covariates: Option<Vec<String>>,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub gamma_step: f64,
    pub mode: CiMode,
    pub fit: FitSettings,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateRun {
    pub trials: usize,
    pub n_pre: usize,
    pub n_post: usize,
    pub gamma_true: f64,
    /// γ at which intervals are evaluated.
    pub gamma: f64,
    pub offset: f64,
    pub fit: FitSettings,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchmarkRun {
    pub input: PathBuf,
    pub covariates: Option<Vec<String>>,
    pub z_column: String,
    pub quantile: Option<f64>,
    pub fit: FitSettings,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
pub struct GenerateRun {
    pub n_pre: usize,
    pub n_post: usize,
    pub gamma_true: f64,
    pub offsets: Vec<f64>,
    pub seed: u64,
    pub out_dir: PathBuf,
}

/// Header object written into every artifact.
pub fn provenance<T: Serialize>(command: &str, config: &T) -> serde_json::Value {
    serde_json::json!({
        "version": needaudit::VERSION,
        "command": command,
        "config": config,
    })
}
