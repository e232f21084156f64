//! Environment, offspring law and mating rule of a bisexual branching
//! process in random environment, with the regularity audits C1–C7.

pub mod conditions;
mod environment;
mod mating;
mod offspring;

pub use environment::EnvironmentModel;
pub use mating::{FemalesPerMale, Mating, MatingRule, RuleKind};
pub use offspring::{
    poisson_centered_abs_moment, sample_poisson, MeanMap, OffspringFamily, OffspringModel, COUNT_GUARD,
    NORMAL_FALLBACK_MEAN,
};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// `ξ(η) = ln g(E_η φ, E_η μ, η)`.
///
/// Evaluated in log space through the homogeneity of `g`, so that the
/// canonical model returns `η` bit-for-bit.
pub fn xi(rule: &dyn Mating, offspring: &OffspringModel, eta: f64) -> Result<f64> {
    let (lf, lm) = offspring.ln_conditional_means(eta);
    let pivot = lf.max(lm);
    if pivot == f64::NEG_INFINITY || pivot.is_nan() {
        return Err(Error::DegenerateModel(format!("both conditional means vanish at eta = {eta}")));
    }
    let g = rule.approximant((lf - pivot).exp(), (lm - pivot).exp(), eta);
    if !(g > 0.0) {
        return Err(Error::DegenerateModel(format!("g(E phi, E mu, eta) = 0 at eta = {eta}")));
    }
    Ok(pivot + g.ln())
}

/// The terms `ω¹, ω², ω³` and `ζ = ln⁺(ω¹ + ω² + ω³)` at one environment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Omega {
    pub omega1: f64,
    pub omega2: f64,
    pub omega3: f64,
    pub zeta: f64,
}

pub fn omega(rule: &dyn Mating, offspring: &OffspringModel, eta: f64) -> Omega {
    let order = 1.0 + rule.delta();
    let omega1 = rule.lipschitz(eta).powf(order) + rule.residual_scale(eta).powf(order);
    let (mf, mm) = offspring.conditional_means(eta);
    let omega2 = mf + mm;
    let (cf, cm) = offspring.centered_abs_moments(eta, order);
    let omega3 = cf + cm;
    let zeta = (omega1 + omega2 + omega3).ln().max(0.0);
    Omega { omega1, omega2, omega3, zeta }
}

/// A complete process specification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Model {
    #[serde(default = "default_environment")]
    pub environment: EnvironmentModel,
    #[serde(default = "OffspringModel::canonical")]
    pub offspring: OffspringModel,
    #[serde(default = "default_rule")]
    pub rule: MatingRule,
}

fn default_environment() -> EnvironmentModel {
    EnvironmentModel::Normal { mean: 0.0, sd: 0.5 }
}

fn default_rule() -> MatingRule {
    MatingRule::monogamous(1)
}

impl Model {
    /// `η ~ N(0, sd²)`, Poisson(e^η) daughters and sons, monogamous `d ≡ 1`.
    /// Here `ξ = η`, so the process is critical with `σ = sd`.
    pub fn canonical(sd: f64) -> Result<Self> {
        let model = Model {
            environment: EnvironmentModel::normal(0.0, sd)?,
            offspring: OffspringModel::canonical(),
            rule: MatingRule::monogamous(1),
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        self.environment.validate()?;
        self.offspring.validate()?;
        self.rule.validate()?;
        if 1.0 / self.rule.alpha >= self.offspring.beta {
            return Err(Error::config(format!(
                "need 1/alpha < beta, got alpha = {} and beta = {}",
                self.rule.alpha, self.offspring.beta
            )));
        }
        Ok(())
    }

    pub fn beta(&self) -> f64 {
        self.offspring.beta
    }

    pub fn xi(&self, eta: f64) -> Result<f64> {
        xi(&self.rule, &self.offspring, eta)
    }

    pub fn omega(&self, eta: f64) -> Omega {
        omega(&self.rule, &self.offspring, eta)
    }

    pub fn sample_env<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.environment.sample(rng)
    }

    /// `(c, b)` with `ξ(η) = c + b·η` identically, when the structure of the
    /// model guarantees it.
    pub fn affine_xi(&self) -> Option<(f64, f64)> {
        if !self.rule.is_environment_free() {
            return None;
        }
        let slope = |m: &MeanMap| match *m {
            MeanMap::LogLinear { slope, .. } => slope,
            MeanMap::Constant { .. } => 0.0,
        };
        let b = match (&self.offspring.family, &self.rule.kind) {
            (OffspringFamily::Fixed { .. }, _) => 0.0,
            (OffspringFamily::Poisson { female, .. }, RuleKind::Polygamous | RuleKind::Asexual) => slope(female),
            (OffspringFamily::Poisson { female, male }, RuleKind::Monogamous { .. }) => {
                if slope(female) != slope(male) {
                    return None;
                }
                slope(female)
            }
        };
        let c = self.xi(0.0).ok()?;
        Some((c, b))
    }

    /// `σ = sd(ξ)` when it follows from the model without sampling.
    pub fn analytic_sigma(&self) -> Option<f64> {
        self.affine_xi().map(|(_, b)| b.abs() * self.environment.sd())
    }
}
