//! The limit law `χ` of `τ / ln² N`.
//!
//! `χ` is the first passage time of `σ·W` to the level `−1`, so
//!
//! ```text
//! p(t) = (2πσ²t³)^{-1/2} exp(−1/(2σ²t)),   F(t) = 2Φ(−1/(σ√t)),   t > 0.
//! ```
//!
//! `χ_σ` equals `χ_1 / σ²` in law.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::erf::{erf, erfc, erfc_inv};

use crate::{Error, Result};

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Standard normal CDF `Φ(x)`.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal quantile `Φ⁻¹(p)` for `0 < p < 1`.
///
/// Starts from `erfc⁻¹` and applies one Newton step on `Φ(x) = p`, which
/// brings the relative residual down to rounding level.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("normal quantile needs p in (0, 1), got {p}")));
    }
    if p > 0.5 {
        return normal_quantile(1.0 - p).map(|x| -x);
    }
    let mut x = -SQRT_2 * erfc_inv(2.0 * p);
    let density = normal_pdf(x);
    if density > 0.0 {
        x -= (normal_cdf(x) - p) / density;
    }
    Ok(x)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiLaw {
    sigma: f64,
}

impl ChiLaw {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::config(format!("chi law needs sigma in (0, inf), got {sigma}")));
        }
        Ok(ChiLaw { sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Density; zero for `t ≤ 0`.
    pub fn pdf(&self, t: f64) -> f64 {
        if !(t > 0.0) {
            return 0.0;
        }
        let s2 = self.sigma * self.sigma;
        (-1.0 / (2.0 * s2 * t)).exp() / (2.0 * std::f64::consts::PI * s2 * t * t * t).sqrt()
    }

    /// `2Φ(−1/(σ√t))`, written as `erfc(1/(σ√(2t)))`.
    pub fn cdf(&self, t: f64) -> f64 {
        if !(t > 0.0) {
            return 0.0;
        }
        if t == f64::INFINITY {
            return 1.0;
        }
        erfc(1.0 / (self.sigma * (2.0 * t).sqrt()))
    }

    /// `1 − F(t)`, accurate in the far right tail.
    pub fn survival(&self, t: f64) -> f64 {
        if !(t > 0.0) {
            return 1.0;
        }
        erf(1.0 / (self.sigma * (2.0 * t).sqrt()))
    }

    /// `F⁻¹(q) = 1/(σ·Φ⁻¹(q/2))²`.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::Domain(format!("chi quantile needs q in (0, 1), got {q}")));
        }
        let z = normal_quantile(0.5 * q)?;
        Ok(1.0 / (self.sigma * z).powi(2))
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5).expect("0.5 is inside (0, 1)")
    }

    /// `1/(σZ)²` with `Z` standard normal.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let z: f64 = rng.sample(StandardNormal);
            if z != 0.0 {
                return 1.0 / (self.sigma * z).powi(2);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn density_vanishes_off_support() {
        let law = ChiLaw::new(1.0).unwrap();
        assert_eq!(law.pdf(0.0), 0.0);
        assert_eq!(law.pdf(-3.0), 0.0);
        assert_eq!(law.cdf(0.0), 0.0);
        assert_eq!(law.cdf(-1.0), 0.0);
        assert_eq!(law.cdf(f64::INFINITY), 1.0);
    }

    #[test]
    fn point_values_sigma_one() {
        let law = ChiLaw::new(1.0).unwrap();
        let expected_pdf = (-0.5f64).exp() / (2.0 * std::f64::consts::PI).sqrt();
        assert!((law.pdf(1.0) - expected_pdf).abs() < 1e-15);
        assert!((law.pdf(1.0) - 0.241971).abs() < 1e-6);
        assert!((law.cdf(1.0) - 0.317311).abs() < 1e-6);
        assert!((law.median() - 2.1981).abs() < 1e-4);
    }

    #[test]
    fn normal_quantile_inverts_cdf() {
        for &p in &[1e-12, 1e-6, 0.001, 0.025, 0.25, 0.5, 0.75, 0.975, 0.999999] {
            let x = normal_quantile(p).unwrap();
            assert!((normal_cdf(x) - p).abs() <= 1e-14 * p.max(1e-3), "p = {p}");
        }
        assert!(normal_quantile(0.0).is_err());
        assert!(normal_quantile(1.0).is_err());
    }

    #[test]
    fn quantile_round_trip() {
        let law = ChiLaw::new(1.0).unwrap();
        assert!((law.quantile(law.cdf(1.0)).unwrap() - 1.0).abs() < 1e-9);
        for i in 1..1000 {
            let q = i as f64 / 1000.0;
            assert!((law.cdf(law.quantile(q).unwrap()) - q).abs() < 1e-10);
        }
        assert!(law.quantile(0.0).is_err());
        assert!(law.quantile(1.5).is_err());
    }

    #[test]
    fn quantile_and_cdf_are_monotone() {
        let law = ChiLaw::new(0.7).unwrap();
        let qs: Vec<f64> = (1..200).map(|i| law.quantile(i as f64 / 200.0).unwrap()).collect();
        assert!(qs.windows(2).all(|w| w[0] < w[1]));
        let fs: Vec<f64> = (0..1000).map(|i| law.cdf(1e-3 * 1.02f64.powi(i))).collect();
        assert!(fs.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn scaling_in_sigma() {
        let base = ChiLaw::new(1.0).unwrap();
        for &sigma in &[0.2, 0.5, 3.0] {
            let law = ChiLaw::new(sigma).unwrap();
            for &t in &[0.01, 0.5, 2.0, 80.0] {
                assert!((law.cdf(t) - base.cdf(sigma * sigma * t)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn survival_complements_cdf() {
        let law = ChiLaw::new(0.5).unwrap();
        for &t in &[0.1, 1.0, 50.0, 1e6] {
            assert!((law.cdf(t) + law.survival(t) - 1.0).abs() < 1e-14);
        }
        // the tail mass beyond 50 is far from negligible
        assert!((law.survival(50.0) - 0.2227).abs() < 1e-3);
    }

    #[test]
    fn draws_are_positive_and_match_cdf_at_one() {
        let law = ChiLaw::new(1.0).unwrap();
        let mut rng = seeded(31);
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| law.sample(&mut rng)).collect();
        assert!(draws.iter().all(|&t| t > 0.0));
        let below = draws.iter().filter(|&&t| t <= 1.0).count() as f64 / n as f64;
        assert!((below - 0.317311).abs() < 0.01);
    }

    #[test]
    fn invalid_sigma_rejected() {
        assert!(ChiLaw::new(0.0).is_err());
        assert!(ChiLaw::new(-1.0).is_err());
        assert!(ChiLaw::new(f64::NAN).is_err());
    }
}
