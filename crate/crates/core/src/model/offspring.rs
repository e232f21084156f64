//! Conditional offspring law of one couple given the environment.

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::{Error, Result};

/// Upper limit for any count the simulator stores as an integer.
pub const COUNT_GUARD: u64 = 1 << 62;

/// Above this mean, Poisson draws use `round(μ + √μ·Z)`. The relative
/// error of the normal approximation is `O(μ^{-1/2}) ≈ 1e-6` here.
pub const NORMAL_FALLBACK_MEAN: f64 = 1e12;

/// Absolute truncation bound for the centered absolute moment series.
const SERIES_TOLERANCE: f64 = 1e-12;

/// Conditional mean of one sex as a function of the environment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum MeanMap {
    /// `m(η) = exp(intercept + slope·η)`; the intercept defaults to 0.
    LogLinear {
        #[serde(default)]
        intercept: f64,
        slope: f64,
    },
    /// `m(η) = constant`.
    Constant { constant: f64 },
}

impl MeanMap {
    /// `m(η) = e^η`.
    pub const EXP: MeanMap = MeanMap::LogLinear { intercept: 0.0, slope: 1.0 };

    pub fn exp_shifted(shift: f64) -> Self {
        MeanMap::LogLinear { intercept: shift, slope: 1.0 }
    }

    pub fn ln_eval(&self, eta: f64) -> f64 {
        match *self {
            MeanMap::LogLinear { intercept, slope } => intercept + slope * eta,
            MeanMap::Constant { constant } => constant.ln(),
        }
    }

    pub fn eval(&self, eta: f64) -> f64 {
        match *self {
            MeanMap::LogLinear { .. } => self.ln_eval(eta).exp(),
            MeanMap::Constant { constant } => constant,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            MeanMap::LogLinear { intercept, slope } if intercept.is_finite() && slope.is_finite() => Ok(()),
            MeanMap::Constant { constant } if constant.is_finite() && constant >= 0.0 => Ok(()),
            other => Err(Error::config(format!("invalid mean map {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum OffspringFamily {
    /// Female and male counts conditionally independent Poisson.
    Poisson { female: MeanMap, male: MeanMap },
    /// Every couple has exactly `female` daughters and `male` sons.
    Fixed { female: u64, male: u64 },
}

/// Offspring law of a couple, plus the moment exponent `β` of C5.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OffspringModel {
    #[serde(flatten)]
    pub family: OffspringFamily,
    #[serde(default = "default_beta")]
    pub beta: f64,
}

pub(crate) fn default_beta() -> f64 {
    3.0
}

impl OffspringModel {
    pub fn poisson(female: MeanMap, male: MeanMap) -> Self {
        OffspringModel { family: OffspringFamily::Poisson { female, male }, beta: default_beta() }
    }

    /// Poisson(e^η) daughters and sons.
    pub fn canonical() -> Self {
        Self::poisson(MeanMap::EXP, MeanMap::EXP)
    }

    pub fn fixed(female: u64, male: u64) -> Self {
        OffspringModel { family: OffspringFamily::Fixed { female, male }, beta: default_beta() }
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta.is_finite() && self.beta > 1.0) {
            return Err(Error::config(format!("beta must lie in (1, inf), got {}", self.beta)));
        }
        match &self.family {
            OffspringFamily::Poisson { female, male } => {
                female.validate()?;
                male.validate()
            }
            OffspringFamily::Fixed { female, male } => {
                if *female >= COUNT_GUARD || *male >= COUNT_GUARD {
                    return Err(Error::config("fixed offspring counts must stay below 2^62"));
                }
                Ok(())
            }
        }
    }

    /// `(ln E_η φ, ln E_η μ)`; `-inf` for a zero mean.
    pub fn ln_conditional_means(&self, eta: f64) -> (f64, f64) {
        match &self.family {
            OffspringFamily::Poisson { female, male } => (female.ln_eval(eta), male.ln_eval(eta)),
            OffspringFamily::Fixed { female, male } => ((*female as f64).ln(), (*male as f64).ln()),
        }
    }

    /// `(E_η φ, E_η μ)`.
    pub fn conditional_means(&self, eta: f64) -> (f64, f64) {
        match &self.family {
            OffspringFamily::Poisson { female, male } => (female.eval(eta), male.eval(eta)),
            OffspringFamily::Fixed { female, male } => (*female as f64, *male as f64),
        }
    }

    /// `(E_η|φ − E_η φ|^order, E_η|μ − E_η μ|^order)`.
    pub fn centered_abs_moments(&self, eta: f64, order: f64) -> (f64, f64) {
        match &self.family {
            OffspringFamily::Poisson { .. } => {
                let (mf, mm) = self.conditional_means(eta);
                (poisson_centered_abs_moment(mf, order).0, poisson_centered_abs_moment(mm, order).0)
            }
            OffspringFamily::Fixed { .. } => (0.0, 0.0),
        }
    }

    /// One couple's offspring `(φ, μ)`.
    pub fn sample_pair<R: Rng + ?Sized>(&self, eta: f64, rng: &mut R) -> Result<(u64, u64)> {
        self.offspring_totals(1, eta, rng)
    }

    /// Totals `(Σ F_j, Σ M_j)` over `n_pairs` couples.
    ///
    /// Poisson totals are drawn as a single Poisson variate with mean
    /// `n_pairs·m(η)`, so the cost does not depend on `n_pairs`.
    pub fn offspring_totals<R: Rng + ?Sized>(&self, n_pairs: u64, eta: f64, rng: &mut R) -> Result<(u64, u64)> {
        if n_pairs == 0 {
            return Ok((0, 0));
        }
        match &self.family {
            OffspringFamily::Poisson { female, male } => {
                let n = n_pairs as f64;
                let f = sample_poisson(n * female.eval(eta), rng)?;
                let m = sample_poisson(n * male.eval(eta), rng)?;
                Ok((f, m))
            }
            OffspringFamily::Fixed { female, male } => {
                let total = |per: u64| {
                    n_pairs
                        .checked_mul(per)
                        .filter(|&t| t <= COUNT_GUARD)
                        .ok_or(Error::Overflow { what: "offspring total", value: n_pairs as f64 * per as f64 })
                };
                Ok((total(*female)?, total(*male)?))
            }
        }
    }

    /// Logarithms of the offspring totals of `exp(ln_pairs)` couples, for
    /// populations too large to count exactly.
    ///
    /// Poisson totals use `ln μ + ln(1 + Z/√μ)`; with `μ > 2^52` the
    /// neglected skewness is below `1e-7` relative.
    pub fn continuum_totals<R: Rng + ?Sized>(&self, ln_pairs: f64, eta: f64, rng: &mut R) -> (f64, f64) {
        let (lf, lm) = self.ln_conditional_means(eta);
        match &self.family {
            OffspringFamily::Poisson { .. } => {
                let mut draw = |ln_mean: f64| {
                    let z: f64 = rng.sample(StandardNormal);
                    if ln_mean == f64::NEG_INFINITY {
                        return f64::NEG_INFINITY;
                    }
                    let rel = z * (-0.5 * ln_mean).exp();
                    ln_mean + rel.max(-1.0 + 1e-300).ln_1p()
                };
                let f = draw(ln_pairs + lf);
                let m = draw(ln_pairs + lm);
                (f, m)
            }
            OffspringFamily::Fixed { .. } => (ln_pairs + lf, ln_pairs + lm),
        }
    }
}

/// One Poisson draw with the given mean.
///
/// Means up to [`NORMAL_FALLBACK_MEAN`] use the exact sampler from
/// `rand_distr` (Knuth below 12, transformed rejection above). Means or
/// draws beyond [`COUNT_GUARD`] are reported as overflow.
pub fn sample_poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> Result<u64> {
    if mean.is_nan() || mean < 0.0 {
        return Err(Error::Domain(format!("Poisson mean must be non-negative, got {mean}")));
    }
    if mean == 0.0 {
        return Ok(0);
    }
    if mean > COUNT_GUARD as f64 {
        return Err(Error::Overflow { what: "Poisson mean", value: mean });
    }
    let value = if mean > NORMAL_FALLBACK_MEAN {
        let z: f64 = rng.sample(StandardNormal);
        (mean + mean.sqrt() * z).round().max(0.0)
    } else {
        Poisson::new(mean).map_err(|e| Error::Domain(e.to_string()))?.sample(rng)
    };
    if value > COUNT_GUARD as f64 {
        return Err(Error::Overflow { what: "Poisson draw", value });
    }
    Ok(value as u64)
}

/// `E|X − m|^p` for `X ~ Poisson(m)` by summing outward from the mode.
///
/// Returns the value and a bound on the discarded tail mass. Beyond the
/// mode the term ratios are monotone, so once a ratio `r < 1` the tail is
/// at most `t·r/(1−r)`; summation stops when that is below `1e-12` on
/// both sides.
pub fn poisson_centered_abs_moment(m: f64, p: f64) -> (f64, f64) {
    if m <= 0.0 {
        return (0.0, 0.0);
    }
    let ln_m = m.ln();
    let mode = m.floor();
    let ln_p_mode = mode * ln_m - m - ln_gamma(mode + 1.0);
    let term = |ln_pk: f64, k: f64| ln_pk.exp() * (k - m).abs().powf(p);

    let mut sum = 0.0;
    let mut bound = 0.0;

    // upward: k = mode, mode + 1, ...
    let mut k = mode;
    let mut ln_pk = ln_p_mode;
    loop {
        let t = term(ln_pk, k);
        sum += t;
        let ln_next = ln_pk + ln_m - (k + 1.0).ln();
        let t_next = term(ln_next, k + 1.0);
        if k >= m + 1.0 && t > 0.0 {
            let r = t_next / t;
            if r < 1.0 {
                let tail = t_next / (1.0 - r);
                if tail < SERIES_TOLERANCE {
                    bound += tail;
                    break;
                }
            }
        }
        if t == 0.0 && k > m + 1.0 {
            break;
        }
        k += 1.0;
        ln_pk = ln_next;
    }

    // downward: k = mode − 1, ..., 0
    let mut k = mode;
    let mut ln_pk = ln_p_mode;
    while k >= 1.0 {
        let ln_prev = ln_pk + k.ln() - ln_m;
        let t_prev = term(ln_prev, k - 1.0);
        sum += t_prev;
        k -= 1.0;
        ln_pk = ln_prev;
        if k >= 1.0 && k <= m - 1.0 && t_prev > 0.0 {
            let t_below = term(ln_pk + k.ln() - ln_m, k - 1.0);
            let r = t_below / t_prev;
            if r < 1.0 {
                let tail = t_below / (1.0 - r);
                if tail < SERIES_TOLERANCE {
                    bound += tail;
                    break;
                }
            }
        }
    }
    (sum, bound)
}
