//! The associated random walk `S_n = ξ_1 + … + ξ_n` and its hitting time
//! `θ = min{n ≥ 1 : S_n ≤ ln^γ N − ln N}`, `γ = 2/(1 + β)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::limit_law::ChiLaw;
use crate::model::Model;
use crate::rng::{self, Purpose};
use crate::{Error, Result};

/// Target mass of `χ` beyond the default step cap.
pub const CENSORING_TARGET: f64 = 0.005;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkPoint {
    pub n: u64,
    pub increment: f64,
    pub position: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct WalkState {
    n: u64,
    position: f64,
    history: Option<Vec<WalkPoint>>,
}

impl WalkState {
    pub fn new() -> Self {
        Self::default()
    }

    /// A walk that keeps every `(n, ξ_n, S_n)`.
    pub fn recording() -> Self {
        WalkState { history: Some(Vec::new()), ..Self::default() }
    }

    #[must_use]
    pub fn step(mut self, increment: f64) -> Self {
        self.advance(increment);
        self
    }

    pub fn advance(&mut self, increment: f64) {
        self.n += 1;
        self.position += increment;
        if let Some(h) = self.history.as_mut() {
            h.push(WalkPoint { n: self.n, increment, position: self.position });
        }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn position(&self) -> f64 {
        self.position
    }

    pub fn history(&self) -> Option<&[WalkPoint]> {
        self.history.as_deref()
    }
}

/// `ln^γ N` as `exp(γ · ln ln N)`.
pub fn ln_power(n0: u64, gamma: f64) -> f64 {
    (gamma * (n0 as f64).ln().ln()).exp()
}

/// `ln² N`.
pub fn ln_squared(n0: u64) -> f64 {
    (n0 as f64).ln().powi(2)
}

/// Default step cap `⌈ln² N · q⌉`, where `q` is the `χ_σ` quantile leaving
/// [`CENSORING_TARGET`] of the limit mass beyond the cap. Sizes below 3
/// use `N = 3`.
pub fn default_max_steps(n0: u64, sigma: f64) -> Result<u64> {
    let q = ChiLaw::new(sigma)?.quantile(1.0 - CENSORING_TARGET)?;
    Ok((ln_squared(n0.max(3)) * q).ceil() as u64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HittingSpec {
    pub n0: u64,
    pub beta: f64,
    pub gamma: f64,
    pub threshold: f64,
    pub max_steps: u64,
}

impl HittingSpec {
    pub fn new(n0: u64, beta: f64, max_steps: u64) -> Result<Self> {
        if n0 < 3 {
            return Err(Error::config(format!("N0 must be at least 3 for the hitting barrier, got {n0}")));
        }
        if !(beta.is_finite() && beta > 1.0) {
            return Err(Error::config(format!("beta must lie in (1, inf), got {beta}")));
        }
        if max_steps == 0 {
            return Err(Error::config("max_steps must be at least 1"));
        }
        let gamma = 2.0 / (1.0 + beta);
        let threshold = ln_power(n0, gamma) - (n0 as f64).ln();
        Ok(HittingSpec { n0, beta, gamma, threshold, max_steps })
    }

    /// Barrier and the default cap for a walk with increment sd `sigma`.
    pub fn with_default_cap(n0: u64, beta: f64, sigma: f64) -> Result<Self> {
        let spec = Self::new(n0, beta, 1)?;
        Ok(HittingSpec { max_steps: default_max_steps(n0, sigma)?, ..spec })
    }

    pub fn ln_n0(&self) -> f64 {
        (self.n0 as f64).ln()
    }

    pub fn ln_power(&self) -> f64 {
        ln_power(self.n0, self.gamma)
    }

    pub fn scale(&self) -> f64 {
        ln_squared(self.n0)
    }

    /// Has `S_n` crossed the barrier?
    #[inline]
    pub fn is_below(&self, position: f64) -> bool {
        position <= self.threshold
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Hitting {
    Hit { theta: u64, position: f64, last_increment: f64 },
    Censored { steps: u64 },
}

impl Hitting {
    pub fn theta(&self) -> Option<u64> {
        match *self {
            Hitting::Hit { theta, .. } => Some(theta),
            Hitting::Censored { .. } => None,
        }
    }
}

/// First `n ≥ 1` with `S_n` at or below the barrier, reading at most
/// `max_steps` increments.
///
/// On a hit, `ln^γ N + ξ_θ ≤ ln N + S_θ ≤ ln^γ N`.
pub fn hitting_time<I: IntoIterator<Item = f64>>(spec: &HittingSpec, increments: I) -> Hitting {
    let mut walk = WalkState::new();
    for xi in increments.into_iter().take(spec.max_steps as usize) {
        walk.advance(xi);
        if spec.is_below(walk.position()) {
            return Hitting::Hit { theta: walk.n(), position: walk.position(), last_increment: xi };
        }
    }
    Hitting::Censored { steps: walk.n() }
}

/// Independent scaled hitting times `θ / ln² N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaSamples {
    pub scaled: Vec<f64>,
    pub censored: u64,
}

/// `replicates` independent walks with increments `ξ(η_n)`, replicate `i`
/// on the stream `(seed, Walk, i)`.
pub fn theta_distribution(spec: &HittingSpec, model: &Model, replicates: u64, seed: u64) -> Result<ThetaSamples> {
    if replicates == 0 {
        return Err(Error::config("replicates must be at least 1"));
    }
    let outcomes: Vec<Result<Hitting>> = (0..replicates)
        .into_par_iter()
        .map(|i| {
            let mut stream = rng::stream(seed, Purpose::Walk, i);
            let mut failure = None;
            let increments = std::iter::from_fn(|| match model.xi(model.sample_env(&mut stream)) {
                Ok(x) => Some(x),
                Err(e) => {
                    failure = Some(e);
                    None
                }
            });
            let hit = hitting_time(spec, increments);
            failure.map_or(Ok(hit), Err)
        })
        .collect();
    let scale = spec.scale();
    let mut samples = ThetaSamples { scaled: Vec::new(), censored: 0 };
    for outcome in outcomes {
        match outcome? {
            Hitting::Hit { theta, .. } => samples.scaled.push(theta as f64 / scale),
            Hitting::Censored { .. } => samples.censored += 1,
        }
    }
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steps_accumulate() {
        let w = WalkState::new().step(0.0);
        assert_eq!((w.n(), w.position()), (1, 0.0));
        let w = WalkState::recording().step(1.0).step(-2.0).step(0.5);
        assert_eq!(w.position(), -0.5);
        assert_eq!(w.history().unwrap().len() as u64, w.n());
        let sum: f64 = w.history().unwrap().iter().map(|p| p.increment).sum();
        assert_eq!(sum, w.position());
        assert!(WalkState::new().step(1.0).history().is_none());
    }

    #[test]
    fn gamma_from_beta() {
        let spec = HittingSpec::new(1000, 3.0, 10).unwrap();
        assert_eq!(spec.gamma, 0.5);
        assert!(spec.threshold < 0.0);
        assert!(HittingSpec::new(3, 1.5, 1).unwrap().threshold < 0.0);
    }

    #[test]
    fn deterministic_descent_hits_at_seven() {
        let n0 = 10f64.exp().round() as u64;
        let spec = HittingSpec::new(n0, 3.0, 1000).unwrap();
        // √10 − 10 with ln N evaluated on the rounded N
        assert!((spec.threshold - (10f64.sqrt() - 10.0)).abs() < 1e-4);
        assert!((spec.threshold + 6.8377).abs() < 1e-3);
        let hit = hitting_time(&spec, std::iter::repeat(-1.0));
        assert_eq!(hit.theta(), Some(7));
    }

    #[test]
    fn upward_walk_is_censored() {
        let spec = HittingSpec::new(1000, 3.0, 100).unwrap();
        assert_eq!(hitting_time(&spec, std::iter::repeat(1.0)), Hitting::Censored { steps: 100 });
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(HittingSpec::new(2, 3.0, 10).is_err());
        assert!(HittingSpec::new(100, 1.0, 10).is_err());
        assert!(HittingSpec::new(100, 3.0, 0).is_err());
    }

    #[test]
    fn degenerate_environment_is_always_censored() {
        let model = Model::canonical(0.0).unwrap();
        let spec = HittingSpec::new(1000, 3.0, 500).unwrap();
        let samples = theta_distribution(&spec, &model, 20, 1).unwrap();
        assert_eq!(samples.censored, 20);
        assert!(samples.scaled.is_empty());
    }

    #[test]
    fn default_cap_leaves_target_mass() {
        let law = ChiLaw::new(0.5).unwrap();
        let n0 = 100_000_000;
        let cap = default_max_steps(n0, 0.5).unwrap();
        let tail = law.survival(cap as f64 / ln_squared(n0));
        assert!(tail <= CENSORING_TARGET && tail > 0.99 * CENSORING_TARGET);
    }

    #[test]
    fn replicate_streams_are_order_independent() {
        let model = Model::canonical(0.5).unwrap();
        let spec = HittingSpec::new(1000, 3.0, 20_000).unwrap();
        let a = theta_distribution(&spec, &model, 64, 9).unwrap();
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap()
            .install(|| theta_distribution(&spec, &model, 64, 9).unwrap());
        assert_eq!(a, b);
    }
}
