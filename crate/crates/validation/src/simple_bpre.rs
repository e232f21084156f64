//! Extinction time of a single-type branching process in an i.i.d. normal
//! environment with Poisson(e^η) offspring, sampled from the generating
//! functions rather than by simulating generations.
//!
//! Given `η_1, …, η_n`, `P(Z_n = 0) = (f_1 ∘ … ∘ f_n(0))^{Z_0}` with
//! `f_i(s) = exp(e^{η_i}(s − 1))`. Drawing `U` once and stopping at the
//! first `n` with `P(Z_n = 0) ≥ U` yields `τ` with the right conditional law.

use rand::Rng;
use rand_distr::{Distribution, Normal};

#[derive(Clone, Copy, Debug)]
pub struct SimpleBpre {
    pub sigma: f64,
    pub z0: u64,
}

impl SimpleBpre {
    /// `τ`, or `None` when the process survives `cap` generations.
    pub fn sample_tau<R: Rng + ?Sized>(&self, cap: u64, rng: &mut R) -> Option<u64> {
        let normal = Normal::new(0.0, self.sigma).expect("valid sigma");
        let u: f64 = rng.random();
        let mut means = Vec::new();
        for n in 1..=cap {
            means.push(normal.sample(rng).exp());
            let mut s = 0.0;
            for &m in means.iter().rev() {
                s = (m * (s - 1.0)).exp();
            }
            if s.powf(self.z0 as f64) >= u {
                return Some(n);
            }
        }
        None
    }
}
