//! Mating functions `L(x, y, z)` and their Lipschitz, homogeneous
//! approximants `g(x, y, z)`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A mating function together with the approximation data of C2–C4.
///
/// Implementors promise `g(t·x, t·y, z) = t·g(x, y, z)` for `t ≥ 0`; the
/// associated walk is computed through that homogeneity.
pub trait Mating: Send + Sync {
    /// `L(females, males, z)`: number of couples formed.
    fn mate(&self, females: u64, males: u64, z: f64) -> u64;
    /// `g(x, y, z)`.
    fn approximant(&self, x: f64, y: f64, z: f64) -> f64;
    /// Lipschitz scale `λ(z)` of `g` in `(x, y)`.
    fn lipschitz(&self, z: f64) -> f64;
    /// Residual scale `ρ(z)` with `|L − g| ≤ ρ(z)(x + y)^α`.
    fn residual_scale(&self, z: f64) -> f64;
    fn alpha(&self) -> f64;

    /// `δ = 1/α − 1`.
    fn delta(&self) -> f64 {
        1.0 / self.alpha() - 1.0
    }
}

/// Females per male `d(z)` of the monogamous rule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FemalesPerMale {
    Constant(u64),
    /// Piecewise constant: `values[i]` applies on `[breaks[i-1], breaks[i])`.
    Table { breaks: Vec<f64>, values: Vec<u64> },
}

impl FemalesPerMale {
    pub fn eval(&self, z: f64) -> u64 {
        match self {
            FemalesPerMale::Constant(d) => *d,
            FemalesPerMale::Table { breaks, values } => values[breaks.partition_point(|&b| b <= z)],
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            FemalesPerMale::Constant(0) => Err(Error::config("d(z) must be a positive integer")),
            FemalesPerMale::Constant(_) => Ok(()),
            FemalesPerMale::Table { breaks, values } => {
                if values.len() != breaks.len() + 1 {
                    return Err(Error::config("d(z) table needs exactly one more value than breaks"));
                }
                if values.contains(&0) {
                    return Err(Error::config("d(z) table values must be positive integers"));
                }
                if breaks.windows(2).any(|w| !(w[0] < w[1])) || breaks.iter().any(|b| !b.is_finite()) {
                    return Err(Error::config("d(z) table breaks must be finite and strictly increasing"));
                }
                Ok(())
            }
        }
    }

    fn is_constant(&self) -> bool {
        matches!(self, FemalesPerMale::Constant(_))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RuleKind {
    /// `L = min(x, y·d(z))`.
    Monogamous { d: FemalesPerMale },
    /// `L = x·min(1, y)`, approximated by `g = x`.
    Polygamous,
    /// `L = x`: the process reduces to a simple branching process of females.
    Asexual,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatingRule {
    #[serde(flatten)]
    pub kind: RuleKind,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Constant residual scale `ρ`.
    #[serde(default = "default_rho")]
    pub rho: f64,
}

fn default_alpha() -> f64 {
    0.5
}

fn default_rho() -> f64 {
    1.0
}

impl MatingRule {
    pub fn new(kind: RuleKind) -> Self {
        MatingRule { kind, alpha: default_alpha(), rho: default_rho() }
    }

    pub fn monogamous(d: u64) -> Self {
        Self::new(RuleKind::Monogamous { d: FemalesPerMale::Constant(d) })
    }

    pub fn polygamous() -> Self {
        Self::new(RuleKind::Polygamous)
    }

    pub fn asexual() -> Self {
        Self::new(RuleKind::Asexual)
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.rho.is_finite() && self.rho > 0.0) {
            return Err(Error::config(format!("rho must lie in (0, inf), got {}", self.rho)));
        }
        if let RuleKind::Monogamous { d } = &self.kind {
            d.validate()?;
        }
        Ok(())
    }

    /// True when `g(x, y, z)` does not depend on `z`.
    pub fn is_environment_free(&self) -> bool {
        match &self.kind {
            RuleKind::Monogamous { d } => d.is_constant(),
            RuleKind::Polygamous | RuleKind::Asexual => true,
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            RuleKind::Monogamous { .. } => "monogamous",
            RuleKind::Polygamous => "polygamous",
            RuleKind::Asexual => "asexual",
        }
    }
}

impl Mating for MatingRule {
    fn mate(&self, females: u64, males: u64, z: f64) -> u64 {
        match &self.kind {
            RuleKind::Monogamous { d } => females.min(males.saturating_mul(d.eval(z))),
            RuleKind::Polygamous => {
                if males == 0 {
                    0
                } else {
                    females
                }
            }
            RuleKind::Asexual => females,
        }
    }

    fn approximant(&self, x: f64, y: f64, z: f64) -> f64 {
        match &self.kind {
            RuleKind::Monogamous { d } => x.min(y * d.eval(z) as f64),
            RuleKind::Polygamous | RuleKind::Asexual => x,
        }
    }

    fn lipschitz(&self, z: f64) -> f64 {
        match &self.kind {
            RuleKind::Monogamous { d } => (d.eval(z) as f64).max(1.0),
            RuleKind::Polygamous | RuleKind::Asexual => 1.0,
        }
    }

    fn residual_scale(&self, _z: f64) -> f64 {
        self.rho
    }

    fn alpha(&self) -> f64 {
        self.alpha
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn built_in_rules_on_counts() {
        assert_eq!(MatingRule::monogamous(1).mate(5, 3, 0.0), 3);
        assert_eq!(MatingRule::monogamous(2).mate(5, 2, 0.0), 4);
        assert_eq!(MatingRule::polygamous().mate(7, 0, 0.0), 0);
        assert_eq!(MatingRule::polygamous().mate(7, 2, 0.0), 7);
        assert_eq!(MatingRule::asexual().mate(4, 999, 0.0), 4);
    }

    #[test]
    fn approximants() {
        let mono = MatingRule::monogamous(1);
        assert_eq!(mono.approximant(2.5, 4.0, 0.3), 2.5);
        for rule in [mono, MatingRule::polygamous(), MatingRule::asexual()] {
            assert_eq!(rule.approximant(0.0, 0.0, -1.2), 0.0);
        }
    }

    #[test]
    fn monogamous_lipschitz_scale_is_max_one_d() {
        assert_eq!(MatingRule::monogamous(1).lipschitz(0.0), 1.0);
        assert_eq!(MatingRule::monogamous(3).lipschitz(0.0), 3.0);
    }

    #[test]
    fn d_table_is_piecewise_constant() {
        let d = FemalesPerMale::Table { breaks: vec![-0.5, 0.5], values: vec![1, 2, 3] };
        assert_eq!(d.eval(-1.0), 1);
        assert_eq!(d.eval(-0.5), 2);
        assert_eq!(d.eval(0.0), 2);
        assert_eq!(d.eval(0.5), 3);
        let rule = MatingRule::new(RuleKind::Monogamous { d });
        rule.validate().unwrap();
        assert_eq!(rule.mate(10, 4, 1.0), 10);
        assert!(!rule.is_environment_free());
    }

    #[test]
    fn invalid_rules_rejected() {
        assert!(MatingRule::monogamous(0).validate().is_err());
        assert!(MatingRule::asexual().with_alpha(1.0).validate().is_err());
        assert!(MatingRule::asexual().with_rho(0.0).validate().is_err());
        let bad = MatingRule::new(RuleKind::Monogamous {
            d: FemalesPerMale::Table { breaks: vec![0.0], values: vec![1] },
        });
        assert!(bad.validate().is_err());
    }

    #[test]
    fn delta_from_alpha() {
        assert_eq!(MatingRule::asexual().delta(), 1.0);
        assert!((MatingRule::asexual().with_alpha(0.8).delta() - 0.25).abs() < 1e-15);
    }
}
