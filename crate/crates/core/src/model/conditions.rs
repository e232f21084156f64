//! Executable checks of the conditions C1–C7 on a model.
//!
//! C1–C4 are checked by evaluation (random or exhaustive); C5 follows from
//! the offspring family; C6 and C7 are Monte Carlo estimates over `η`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{omega, xi, EnvironmentModel, Mating, OffspringFamily, OffspringModel};
use crate::Result;

/// At most this many witnesses are kept per verdict.
pub const MAX_WITNESSES: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Condition {
    C1,
    C2,
    C3,
    C4,
    C5,
    C6,
    C7,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Estimated,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    /// Sample mean with its standard error.
    pub fn mean_of(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        Estimate { value: mean, se: (var / n).sqrt() }
    }

    /// Sample variance with the standard error `√((m₄ − s⁴)/n)`.
    pub fn variance_of(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
        Estimate { value: var, se: ((m4 - var * var).max(0.0) / n).sqrt() }
    }
}

/// A concrete point at which a condition was found to fail.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// Names of the coordinates, e.g. `"x,y,u,v,z"`.
    pub coordinates: String,
    pub point: Vec<f64>,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub condition: Condition,
    pub status: Status,
    pub checked: u64,
    pub violations: u64,
    pub witnesses: Vec<Witness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimate: Option<Estimate>,
    pub note: String,
}

impl Verdict {
    fn new(condition: Condition, note: impl Into<String>) -> Self {
        Verdict {
            condition,
            status: Status::Pass,
            checked: 0,
            violations: 0,
            witnesses: Vec::new(),
            max_ratio: None,
            estimate: None,
            note: note.into(),
        }
    }

    fn record(&mut self, ok: bool, witness: impl FnOnce() -> Witness) {
        self.checked += 1;
        if !ok {
            self.violations += 1;
            self.status = Status::Fail;
            if self.witnesses.len() < MAX_WITNESSES {
                self.witnesses.push(witness());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }
}

/// Monte Carlo moments over the environment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimates {
    pub samples: u64,
    pub mean_xi: Estimate,
    pub var_xi: Estimate,
    pub abs_xi_pow: Estimate,
    pub abs_zeta_pow: Estimate,
    pub omega1: Estimate,
    pub omega2: Estimate,
    pub omega3: Estimate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub rule: String,
    pub verdicts: Vec<Verdict>,
    pub moments: Option<MomentEstimates>,
}

impl ConditionReport {
    pub fn verdict(&self, condition: Condition) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.condition == condition)
    }

    pub fn is_critical(&self) -> bool {
        self.verdict(Condition::C7).is_some_and(Verdict::passed)
    }
}

fn superadditive_at(rule: &dyn Mating, x: u64, y: u64, u: u64, v: u64, z: f64) -> bool {
    rule.mate(x + u, y + v, z) as u128 >= rule.mate(x, y, z) as u128 + rule.mate(u, v, z) as u128
}

fn superadditivity_witness(rule: &dyn Mating, x: u64, y: u64, u: u64, v: u64, z: f64) -> Witness {
    Witness {
        coordinates: "x,y,u,v,z".into(),
        point: vec![x as f64, y as f64, u as f64, v as f64, z],
        detail: format!(
            "L(x+u, y+v) = {} < L(x, y) + L(u, v) = {} + {}",
            rule.mate(x + u, y + v, z),
            rule.mate(x, y, z),
            rule.mate(u, v, z)
        ),
    }
}

/// C1 on `trials` random tuples, counts uniform on `0..=range`, `z` from
/// the environment.
pub fn check_superadditivity<R: Rng + ?Sized>(
    rule: &dyn Mating,
    env: &EnvironmentModel,
    trials: u64,
    range: u64,
    rng: &mut R,
) -> Verdict {
    let mut verdict = Verdict::new(Condition::C1, format!("{trials} random tuples on [0, {range}]^4"));
    for _ in 0..trials {
        let mut draw = || rng.random_range(0..=range);
        let (x, y, u, v) = (draw(), draw(), draw(), draw());
        let z = env.sample(rng);
        verdict.record(superadditive_at(rule, x, y, u, v, z), || superadditivity_witness(rule, x, y, u, v, z));
    }
    verdict
}

/// C1 on every tuple of counts `≤ max_count` at a fixed `z`.
pub fn check_superadditivity_exhaustive(rule: &dyn Mating, max_count: u64, z: f64) -> Verdict {
    let mut verdict = Verdict::new(Condition::C1, format!("all tuples on [0, {max_count}]^4 at z = {z}"));
    for x in 0..=max_count {
        for y in 0..=max_count {
            for u in 0..=max_count {
                for v in 0..=max_count {
                    verdict.record(superadditive_at(rule, x, y, u, v, z), || {
                        superadditivity_witness(rule, x, y, u, v, z)
                    });
                }
            }
        }
    }
    verdict
}

/// Relative slack allowed for floating-point evaluation of `g`.
pub const NUMERICAL_SLACK: f64 = 1e-12;

/// C2: `|g(x,y,z) − g(u,v,z)| ≤ λ(z)(|x−u| + |y−v|)` on random reals.
pub fn check_lipschitz<R: Rng + ?Sized>(
    rule: &dyn Mating,
    env: &EnvironmentModel,
    trials: u64,
    range: f64,
    rng: &mut R,
) -> Verdict {
    let mut verdict = Verdict::new(Condition::C2, format!("{trials} random tuples on [0, {range}]^4"));
    for _ in 0..trials {
        let mut draw = || range * rng.random::<f64>();
        let (x, y, u, v) = (draw(), draw(), draw(), draw());
        let z = env.sample(rng);
        let (g1, g2) = (rule.approximant(x, y, z), rule.approximant(u, v, z));
        let bound = rule.lipschitz(z) * ((x - u).abs() + (y - v).abs());
        let ok = (g1 - g2).abs() <= bound + NUMERICAL_SLACK * (1.0 + g1.abs() + g2.abs());
        verdict.record(ok, || Witness {
            coordinates: "x,y,u,v,z".into(),
            point: vec![x, y, u, v, z],
            detail: format!("|g - g'| = {} > lambda * dist = {bound}", (g1 - g2).abs()),
        });
    }
    verdict
}

/// C3: `g(t·x, t·y, z) = t·g(x, y, z)` for random `t ∈ [0, 10]`.
pub fn check_homogeneity<R: Rng + ?Sized>(
    rule: &dyn Mating,
    env: &EnvironmentModel,
    trials: u64,
    range: f64,
    rng: &mut R,
) -> Verdict {
    let mut verdict = Verdict::new(Condition::C3, format!("{trials} random (x, y, t) with t in [0, 10]"));
    verdict.record(rule.approximant(0.0, 0.0, env.mean()) == 0.0, || Witness {
        coordinates: "x,y,z".into(),
        point: vec![0.0, 0.0, env.mean()],
        detail: "g(0, 0, z) != 0".into(),
    });
    for _ in 0..trials {
        let x = range * rng.random::<f64>();
        let y = range * rng.random::<f64>();
        let t = 10.0 * rng.random::<f64>();
        let z = env.sample(rng);
        let scaled = rule.approximant(t * x, t * y, z);
        let base = t * rule.approximant(x, y, z);
        let ok = (scaled - base).abs() <= NUMERICAL_SLACK * (1.0 + base.abs());
        verdict.record(ok, || Witness {
            coordinates: "x,y,t,z".into(),
            point: vec![x, y, t, z],
            detail: format!("g(tx, ty) = {scaled} but t g(x, y) = {base}"),
        });
    }
    verdict
}

/// C4: `|L − g| / (x + y)^α ≤ ρ(z)` on the grid `0..=grid` squared with
/// `x + y ≥ 1`, one environment draw per grid point.
pub fn check_approximation<R: Rng + ?Sized>(
    rule: &dyn Mating,
    env: &EnvironmentModel,
    grid: u64,
    rng: &mut R,
) -> Verdict {
    let mut verdict = Verdict::new(Condition::C4, format!("grid [0, {grid}]^2 with x + y >= 1"));
    let mut max_ratio: f64 = 0.0;
    for x in 0..=grid {
        for y in 0..=grid {
            if x + y == 0 {
                continue;
            }
            let z = env.sample(rng);
            let residual = (rule.mate(x, y, z) as f64 - rule.approximant(x as f64, y as f64, z)).abs();
            let ratio = residual / ((x + y) as f64).powf(rule.alpha());
            max_ratio = max_ratio.max(ratio);
            let rho = rule.residual_scale(z);
            verdict.record(ratio <= rho, || Witness {
                coordinates: "x,y,z".into(),
                point: vec![x as f64, y as f64, z],
                detail: format!("|L - g| / (x + y)^alpha = {ratio} > rho = {rho}"),
            });
        }
    }
    verdict.max_ratio = Some(max_ratio);
    verdict
}

/// C5: finiteness of `E_η φ^β`, `E_η μ^β`, decided from the family.
pub fn check_offspring_moments(offspring: &OffspringModel) -> Verdict {
    let note = match offspring.family {
        OffspringFamily::Poisson { .. } => "Poisson counts have finite moments of all orders",
        OffspringFamily::Fixed { .. } => "deterministic counts have finite moments of all orders",
    };
    Verdict::new(Condition::C5, format!("{note}; beta = {}", offspring.beta))
}

/// Audit of C1–C7 for a model.
///
/// C7 passes when `|Ê ξ| ≤ 4·SE`.
pub fn audit_conditions<R: Rng + ?Sized>(
    rule: &dyn Mating,
    env: &EnvironmentModel,
    offspring: &OffspringModel,
    samples: u64,
    rule_name: &str,
    rng: &mut R,
) -> Result<ConditionReport> {
    if samples < 100 {
        return Err(crate::Error::config(format!("audit needs at least 100 samples, got {samples}")));
    }
    let mut verdicts = vec![
        check_superadditivity(rule, env, samples, 50, rng),
        check_lipschitz(rule, env, samples, 100.0, rng),
        check_homogeneity(rule, env, samples, 100.0, rng),
        check_approximation(rule, env, 40, rng),
        check_offspring_moments(offspring),
    ];

    let beta = offspring.beta;
    let n = samples as usize;
    let mut xis = Vec::with_capacity(n);
    let mut omegas = Vec::with_capacity(n);
    for _ in 0..n {
        let eta = env.sample(rng);
        xis.push(xi(rule, offspring, eta)?);
        omegas.push(omega(rule, offspring, eta));
    }
    let pow = |v: f64| v.abs().powf(1.0 + beta);
    let column = |f: &dyn Fn(&super::Omega) -> f64| omegas.iter().map(f).collect::<Vec<_>>();
    let moments = MomentEstimates {
        samples,
        mean_xi: Estimate::mean_of(&xis),
        var_xi: Estimate::variance_of(&xis),
        abs_xi_pow: Estimate::mean_of(&xis.iter().map(|&x| pow(x)).collect::<Vec<_>>()),
        abs_zeta_pow: Estimate::mean_of(&column(&|w| pow(w.zeta))),
        omega1: Estimate::mean_of(&column(&|w| w.omega1)),
        omega2: Estimate::mean_of(&column(&|w| w.omega2)),
        omega3: Estimate::mean_of(&column(&|w| w.omega3)),
    };

    let mut c6 = Verdict::new(Condition::C6, format!("E|xi|^(1+beta) and E|zeta|^(1+beta), beta = {beta}"));
    c6.status = Status::Estimated;
    c6.checked = samples;
    c6.estimate = Some(moments.abs_zeta_pow);
    if !(moments.abs_xi_pow.value.is_finite() && moments.abs_zeta_pow.value.is_finite()) {
        c6.status = Status::Fail;
        c6.violations = 1;
        c6.witnesses.push(Witness {
            coordinates: "E|xi|^(1+beta),E|zeta|^(1+beta)".into(),
            point: vec![moments.abs_xi_pow.value, moments.abs_zeta_pow.value],
            detail: "non-finite moment estimate".into(),
        });
    }
    verdicts.push(c6);

    let mean = moments.mean_xi;
    let mut c7 = Verdict::new(Condition::C7, "criticality: |mean xi| <= 4 SE");
    c7.estimate = Some(mean);
    c7.record(mean.value.abs() <= 4.0 * mean.se, || Witness {
        coordinates: "mean_xi,se".into(),
        point: vec![mean.value, mean.se],
        detail: format!("|mean xi| = {} exceeds 4 SE = {}", mean.value.abs(), 4.0 * mean.se),
    });
    c7.checked = samples;
    verdicts.push(c7);

    Ok(ConditionReport { rule: rule_name.to_string(), verdicts, moments: Some(moments) })
}
