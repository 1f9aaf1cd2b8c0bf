//! Resolved per-subcommand configuration. Each struct can be read from a
//! TOML file, overridden by flags, and is written back next to every
//! output so a run can be repeated exactly.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use cheapsub::intervals::Method;
use cheapsub::resampling::{DEFAULT_ETA, DEFAULT_MAX_RETRIES};
use cheapsub::simstudy::truth::{DEFAULT_MC_DRAWS, DEFAULT_MC_SEED, DEFAULT_NODES};

use crate::ConfigError;

pub const DEFAULT_SEED: u64 = 20_240_501;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    /// Sample mean of one numeric column.
    Mean,
    /// Two-interval absolute risk under a sustained treatment regime.
    Longitudinal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Longitudinal,
    NormalMean,
}

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    toml::from_str(&text)
        .map_err(|e| ConfigError(format!("{}: {e}", path.display())).into())
}

pub fn to_toml<T: Serialize>(cfg: &T) -> String {
    toml::to_string(cfg).expect("configs serialize to TOML")
}

/// Write `cfg` as `<output>.config.toml`.
pub fn write_sidecar<T: Serialize>(output: &Path, cfg: &T) -> Result<PathBuf> {
    let mut name = output.as_os_str().to_owned();
    name.push(".config.toml");
    let path = PathBuf::from(name);
    std::fs::write(&path, to_toml(cfg))
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn field(path: &str, msg: impl std::fmt::Display) -> anyhow::Error {
    ConfigError(format!("{path}: {msg}")).into()
}

fn check_eta(path: &str, eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(field(path, format_args!("must lie in (0, 1), got {eta}")));
    }
    Ok(())
}

fn check_alpha(path: &str, alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(field(path, format_args!("must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

fn check_regime(path: &str, regime: u8) -> Result<()> {
    if regime > 1 {
        return Err(field(path, format_args!("must be 0 or 1, got {regime}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CiConfig {
    pub input: Option<PathBuf>,
    pub estimator: EstimatorKind,
    /// Column used by the mean estimator; the first column when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column: Option<String>,
    pub methods: Vec<Method>,
    /// Fixed subsample size; takes precedence over `eta`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    pub eta: f64,
    #[serde(rename = "B")]
    pub b: usize,
    pub alpha: f64,
    pub master_seed: u64,
    pub max_retries: usize,
    pub regime: u8,
    pub targeting: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl Default for CiConfig {
    fn default() -> Self {
        Self {
            input: None,
            estimator: EstimatorKind::Mean,
            column: None,
            methods: vec![Method::CheapSubsampling],
            m: None,
            eta: DEFAULT_ETA,
            b: 25,
            alpha: 0.05,
            master_seed: DEFAULT_SEED,
            max_retries: DEFAULT_MAX_RETRIES,
            regime: 1,
            targeting: true,
            output: None,
        }
    }
}

impl CiConfig {
    pub fn validate(&self) -> Result<()> {
        if self.input.is_none() {
            return Err(field("ci.input", "an input CSV is required"));
        }
        if self.methods.is_empty() {
            return Err(field("ci.methods", "at least one method is required"));
        }
        if self.b == 0 {
            return Err(field("ci.B", "must be at least 1"));
        }
        check_eta("ci.eta", self.eta)?;
        check_alpha("ci.alpha", self.alpha)?;
        check_regime("ci.regime", self.regime)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub model: ModelKind,
    pub regime: u8,
    pub targeting: bool,
    pub n: Vec<usize>,
    pub eta: Vec<f64>,
    #[serde(rename = "B")]
    pub b: Vec<usize>,
    pub alpha: f64,
    pub n_sim: usize,
    pub methods: Vec<Method>,
    pub master_seed: u64,
    pub max_retries: usize,
    pub keep_intervals: bool,
    pub output_dir: PathBuf,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::Longitudinal,
            regime: 1,
            targeting: true,
            n: vec![500],
            eta: vec![DEFAULT_ETA],
            b: vec![25],
            alpha: 0.05,
            n_sim: cheapsub::simstudy::coverage::DEFAULT_N_SIM,
            methods: Method::ALL.to_vec(),
            master_seed: DEFAULT_SEED,
            max_retries: DEFAULT_MAX_RETRIES,
            keep_intervals: false,
            output_dir: PathBuf::from("simulation-output"),
        }
    }
}

impl SimulateConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, empty) in [
            ("simulate.n", self.n.is_empty()),
            ("simulate.eta", self.eta.is_empty()),
            ("simulate.B", self.b.is_empty()),
            ("simulate.methods", self.methods.is_empty()),
        ] {
            if empty {
                return Err(field(name, "must not be empty"));
            }
        }
        for (i, &e) in self.eta.iter().enumerate() {
            check_eta(&format!("simulate.eta[{i}]"), e)?;
        }
        for (i, &b) in self.b.iter().enumerate() {
            if b == 0 {
                return Err(field(&format!("simulate.B[{i}]"), "must be at least 1"));
            }
        }
        for (i, &n) in self.n.iter().enumerate() {
            for &e in &self.eta {
                let m = (e * n as f64).floor() as usize;
                if m == 0 || m >= n {
                    return Err(field(
                        &format!("simulate.n[{i}]"),
                        format_args!("n = {n} with eta = {e} gives m = {m}; need 1 <= m < n"),
                    ));
                }
            }
        }
        if self.n_sim == 0 {
            return Err(field("simulate.n_sim", "must be at least 1"));
        }
        check_alpha("simulate.alpha", self.alpha)?;
        check_regime("simulate.regime", self.regime)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TruthConfig {
    pub regime: u8,
    pub nodes: usize,
    pub mc_draws: u64,
    pub mc_seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl Default for TruthConfig {
    fn default() -> Self {
        Self {
            regime: 1,
            nodes: DEFAULT_NODES,
            mc_draws: DEFAULT_MC_DRAWS,
            mc_seed: DEFAULT_MC_SEED,
            output: None,
        }
    }
}

impl TruthConfig {
    pub fn validate(&self) -> Result<()> {
        check_regime("truth.regime", self.regime)?;
        if self.nodes < 2 {
            return Err(field("truth.nodes", "must be at least 2"));
        }
        if self.mc_draws == 0 {
            return Err(field("truth.mc_draws", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenerateConfig {
    pub n: usize,
    pub master_seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        Self {
            n: 1000,
            master_seed: DEFAULT_SEED,
            output: None,
        }
    }
}

impl GenerateConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(field("generate.n", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeedExperimentConfig {
    /// Data file; when absent a dataset of size `n` is simulated with
    /// `data_seed`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    pub estimator: EstimatorKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column: Option<String>,
    pub regime: u8,
    pub targeting: bool,
    pub n: usize,
    pub data_seed: u64,
    pub eta: Vec<f64>,
    #[serde(rename = "B")]
    pub b: Vec<usize>,
    pub n_seeds: usize,
    pub master_seed: u64,
    pub alpha: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl Default for SeedExperimentConfig {
    fn default() -> Self {
        Self {
            input: None,
            estimator: EstimatorKind::Longitudinal,
            column: None,
            regime: 1,
            targeting: true,
            n: 2000,
            data_seed: DEFAULT_SEED,
            eta: vec![0.5, DEFAULT_ETA, 0.8, 0.9],
            b: vec![5, 10, 25, 50, 100, 200],
            n_seeds: 10,
            master_seed: DEFAULT_SEED,
            alpha: 0.05,
            output: None,
        }
    }
}

impl SeedExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.input.is_none() && self.estimator == EstimatorKind::Mean {
            return Err(field(
                "seed_experiment.input",
                "the mean estimator needs an input CSV",
            ));
        }
        if self.eta.is_empty() {
            return Err(field("seed_experiment.eta", "must not be empty"));
        }
        for (i, &e) in self.eta.iter().enumerate() {
            check_eta(&format!("seed_experiment.eta[{i}]"), e)?;
        }
        if self.b.is_empty() || self.b.contains(&0) {
            return Err(field("seed_experiment.B", "must be non-empty and positive"));
        }
        if self.n_seeds == 0 {
            return Err(field("seed_experiment.n_seeds", "must be at least 1"));
        }
        check_alpha("seed_experiment.alpha", self.alpha)?;
        check_regime("seed_experiment.regime", self.regime)
    }
}
