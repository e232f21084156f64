//! TOML configuration file.
//!
//! ```toml
//! [model]
//! environment = { family = "normal", mean = 0.0, sd = 0.5 }
//! offspring = { family = "poisson", female = { slope = 1.0 }, male = { slope = 1.0 }, beta = 3.0 }
//! rule = { kind = "monogamous", d = 1, alpha = 0.5, rho = 1.0 }
//!
//! [experiment]
//! n_grid = [1000, 100000, 100000000]
//! replicates = 2000
//! epsilon = 1.0
//! seed = 42
//!
//! [output]
//! runs = "runs.csv"
//! summary = "summary.json"
//! ```
//!
//! Every section and key is optional; omitted values take the defaults
//! below. `d` is either a constant or `{ breaks = [..], values = [..] }`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::model::{EnvironmentModel, MatingRule, Model, OffspringModel};
use crate::simulator::{LargePopulation, RecordingMode};
use crate::{Error, Result};

pub const DEFAULT_N_GRID: [u64; 3] = [1_000, 100_000, 100_000_000];
pub const DEFAULT_LEMMA_GRID: [u64; 3] = [100, 1_000, 10_000];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "canonical_model")]
    pub model: Model,
    #[serde(default)]
    pub experiment: ExperimentSettings,
    #[serde(default)]
    pub lemma: LemmaSettings,
    #[serde(default)]
    pub output: OutputPaths,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            model: canonical_model(),
            experiment: ExperimentSettings::default(),
            lemma: LemmaSettings::default(),
            output: OutputPaths::default(),
        }
    }
}

fn canonical_model() -> Model {
    Model {
        environment: EnvironmentModel::Normal { mean: 0.0, sd: 0.5 },
        offspring: OffspringModel::canonical(),
        rule: MatingRule::monogamous(1),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSettings {
    /// Starting sizes for `simulate`, `coupled` and `experiment`.
    pub n_grid: Vec<u64>,
    pub replicates: u64,
    pub epsilon: f64,
    pub seed: u64,
    pub threads: usize,
    /// Step cap; the χ-tail default when absent.
    pub max_steps: Option<u64>,
    pub recording: RecordingMode,
    pub large_population: LargePopulation,
    pub ks_tau_max: f64,
    pub ks_theta_max: f64,
    pub max_censored_fraction: f64,
    /// Environment draws for the audit and for Monte Carlo σ.
    pub audit_samples: u64,
    pub sigma_samples: u64,
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        ExperimentSettings {
            n_grid: DEFAULT_N_GRID.to_vec(),
            replicates: 2000,
            epsilon: 1.0,
            seed: 42,
            threads: 1,
            max_steps: None,
            recording: RecordingMode::Terminal,
            large_population: LargePopulation::Continuum,
            ks_tau_max: 0.08,
            ks_theta_max: 0.06,
            max_censored_fraction: 0.05,
            audit_samples: 10_000,
            sigma_samples: 1_000_000,
        }
    }
}

/// Frozen-environment sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LemmaSettings {
    pub n_grid: Vec<u64>,
    pub paths: u64,
    pub replicates: u64,
    pub horizon: u64,
}

impl Default for LemmaSettings {
    fn default() -> Self {
        LemmaSettings { n_grid: DEFAULT_LEMMA_GRID.to_vec(), paths: 20, replicates: 10_000, horizon: 50 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPaths {
    pub runs: Option<PathBuf>,
    /// Stem; one file per N as `<stem>_N<N>.csv`.
    pub ecdf: Option<PathBuf>,
    pub summary: Option<PathBuf>,
    pub trajectories: Option<PathBuf>,
    pub diagnostics: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        let e = &self.experiment;
        check_grid("experiment.n_grid", &e.n_grid, 3)?;
        check_at_least("experiment.replicates", e.replicates, 1)?;
        check_at_least("experiment.threads", e.threads as u64, 1)?;
        if let Some(cap) = e.max_steps {
            check_at_least("experiment.max_steps", cap, 1)?;
        }
        check_open("experiment.epsilon", e.epsilon, 0.0, f64::INFINITY)?;
        check_closed("experiment.ks_tau_max", e.ks_tau_max, 0.0, 1.0)?;
        check_closed("experiment.ks_theta_max", e.ks_theta_max, 0.0, 1.0)?;
        check_closed("experiment.max_censored_fraction", e.max_censored_fraction, 0.0, 1.0)?;
        check_at_least("experiment.audit_samples", e.audit_samples, 100)?;
        check_at_least("experiment.sigma_samples", e.sigma_samples, 2)?;
        let l = &self.lemma;
        check_grid("lemma.n_grid", &l.n_grid, 1)?;
        check_at_least("lemma.paths", l.paths, 1)?;
        check_at_least("lemma.replicates", l.replicates, 2)?;
        check_at_least("lemma.horizon", l.horizon, 1)?;
        Ok(())
    }
}

fn check_grid(name: &str, grid: &[u64], min: u64) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::config(format!("{name} must not be empty")));
    }
    if let Some(&n) = grid.iter().find(|&&n| n < min || n > crate::model::COUNT_GUARD) {
        return Err(Error::config(format!("{name} entries must lie in [{min}, 2^62], got {n}")));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::config(format!("{name} must be strictly increasing")));
    }
    Ok(())
}

fn check_at_least(name: &str, value: u64, min: u64) -> Result<()> {
    if value < min {
        return Err(Error::config(format!("{name} must be at least {min}, got {value}")));
    }
    Ok(())
}

fn check_open(name: &str, value: f64, lo: f64, hi: f64) -> Result<()> {
    if !(value > lo && value < hi) {
        return Err(Error::config(format!("{name} must lie in ({lo}, {hi}), got {value}")));
    }
    Ok(())
}

fn check_closed(name: &str, value: f64, lo: f64, hi: f64) -> Result<()> {
    if !(value >= lo && value <= hi) {
        return Err(Error::config(format!("{name} must lie in [{lo}, {hi}], got {value}")));
    }
    Ok(())
}
