//! The i.i.d. environment law of `η_n`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Distribution family of the environment.
///
/// Both families have finite moments of every order, so the `E|ξ|^{1+β}`
/// and `E|ζ|^{1+β}` audits are finite whenever the mean maps are
/// log-linear in `η`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvironmentModel {
    Normal { mean: f64, sd: f64 },
    Uniform { low: f64, high: f64 },
}

impl Default for EnvironmentModel {
    fn default() -> Self {
        EnvironmentModel::Normal { mean: 0.0, sd: 1.0 }
    }
}

impl EnvironmentModel {
    pub fn normal(mean: f64, sd: f64) -> Result<Self> {
        let model = EnvironmentModel::Normal { mean, sd };
        model.validate()?;
        Ok(model)
    }

    pub fn uniform(low: f64, high: f64) -> Result<Self> {
        let model = EnvironmentModel::Uniform { low, high };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            EnvironmentModel::Normal { mean, sd } => {
                if !mean.is_finite() {
                    return Err(Error::config(format!("environment mean must be finite, got {mean}")));
                }
                if !(sd.is_finite() && sd >= 0.0) {
                    return Err(Error::config(format!(
                        "environment sd must be a finite value in [0, inf), got {sd}"
                    )));
                }
            }
            EnvironmentModel::Uniform { low, high } => {
                if !(low.is_finite() && high.is_finite() && low <= high) {
                    return Err(Error::config(format!(
                        "uniform environment needs finite low <= high, got [{low}, {high}]"
                    )));
                }
            }
        }
        Ok(())
    }

    /// One draw of `η`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            EnvironmentModel::Normal { mean, sd } => {
                let z: f64 = rng.sample(StandardNormal);
                mean + sd * z
            }
            EnvironmentModel::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            EnvironmentModel::Normal { mean, .. } => mean,
            EnvironmentModel::Uniform { low, high } => 0.5 * (low + high),
        }
    }

    pub fn sd(&self) -> f64 {
        match *self {
            EnvironmentModel::Normal { sd, .. } => sd,
            EnvironmentModel::Uniform { low, high } => (high - low) / 12f64.sqrt(),
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.sd() == 0.0
    }
}
