//! Replicate bundles on one frozen environment path and the empirical
//! ratios behind the residual and mean bounds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{RecordingMode, Simulator};
use crate::model::{Mating, Model};
use crate::rng::{stream, substream, Purpose};
use crate::{Error, Result};

/// Sizes `N_1..N_H` of many replicates sharing `η_1..η_H`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrozenBundle {
    pub n0: u64,
    pub etas: Vec<f64>,
    /// `sizes[r][n − 1]`, zero after extinction.
    pub sizes: Vec<Vec<f64>>,
}

impl FrozenBundle {
    pub fn horizon(&self) -> usize {
        self.etas.len()
    }

    pub fn replicates(&self) -> usize {
        self.sizes.len()
    }

    fn size(&self, r: usize, n: usize) -> f64 {
        if n == 0 {
            self.n0 as f64
        } else {
            self.sizes[r][n - 1]
        }
    }
}

/// Draws environment path `path` and `replicates` independent processes on it.
pub fn run_frozen_bundle(
    model: &Model,
    n0: u64,
    horizon: usize,
    replicates: usize,
    master: u64,
    path: u64,
) -> Result<FrozenBundle> {
    let mut env_rng = stream(master, Purpose::FrozenEnvironment, path);
    let etas: Vec<f64> = (0..horizon).map(|_| model.sample_env(&mut env_rng)).collect();
    let sim = Simulator::new(model);
    let sizes = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(master, Purpose::FrozenOffspring, path, r);
            let t = sim.run_in_environment(n0, &etas, &mut rng, RecordingMode::Full)?;
            let mut row: Vec<f64> = t.steps.iter().map(|s| s.pairs.value()).collect();
            row.resize(horizon, 0.0);
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FrozenBundle { n0, etas, sizes })
}

/// Replicates that must be alive at `n − 1` for the SE of `r3` to be reported.
pub const MIN_SURVIVORS: usize = 30;

/// Ratios at generation `n`; `None` where the denominator vanishes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRow {
    pub n: usize,
    pub eta: f64,
    pub xi: f64,
    pub zeta: f64,
    pub position: f64,
    pub mean_size: f64,
    /// `Ê|R_n|^{1+δ} / (e^{ζ_n} Ê N_{n−1})`.
    pub r2: Option<f64>,
    /// `Ê N_n / (e^{ξ_n} Ê N_{n−1})`.
    pub r3: Option<f64>,
    /// Delta-method SE; absent with fewer than [`MIN_SURVIVORS`] replicates alive at `n − 1`.
    pub r3_se: Option<f64>,
    /// `Ê|N_n − N0 e^{S_n}|^{1+δ} / (n^δ N0 e^{S_n} Σ_i e^{ζ_i − ξ_i + δ(S_n − S_i)})`.
    pub r4: Option<f64>,
}

pub fn residual_diagnostics(bundle: &FrozenBundle, model: &Model) -> Result<Vec<DiagnosticRow>> {
    let reps = bundle.replicates();
    if reps < 2 {
        return Err(Error::config("diagnostics need at least 2 replicates"));
    }
    if bundle.sizes.iter().any(|row| row.len() != bundle.horizon()) {
        return Err(Error::config("every replicate must cover the whole horizon"));
    }
    let delta = model.rule.delta();
    let order = 1.0 + delta;
    let n0 = bundle.n0 as f64;
    let b = reps as f64;

    let mut rows = Vec::with_capacity(bundle.horizon());
    let mut position = 0.0;
    // (ζ_i − ξ_i − δ S_i) for i ≤ n, summed with a running log-sum-exp.
    let mut ln_weight_sum = f64::NEG_INFINITY;
    for n in 1..=bundle.horizon() {
        let eta = bundle.etas[n - 1];
        let xi = model.xi(eta)?;
        let zeta = model.omega(eta).zeta;
        position += xi;
        let term = zeta - xi - delta * position;
        ln_weight_sum = log_add_exp(ln_weight_sum, term);

        let growth = xi.exp();
        let mean_prev = (0..reps).map(|r| bundle.size(r, n - 1)).sum::<f64>() / b;
        let mean_cur = (0..reps).map(|r| bundle.size(r, n)).sum::<f64>() / b;
        let residual_moment = (0..reps)
            .map(|r| (bundle.size(r, n) - bundle.size(r, n - 1) * growth).abs().powf(order))
            .sum::<f64>()
            / b;
        let (r2, r3, r3_se) = if mean_prev > 0.0 {
            let r3 = mean_cur / (growth * mean_prev);
            let var = (0..reps)
                .map(|r| (bundle.size(r, n) - r3 * growth * bundle.size(r, n - 1)).powi(2))
                .sum::<f64>()
                / (b - 1.0);
            let se = (var / b).sqrt() / (growth * mean_prev);
            let survivors = (0..reps).filter(|&r| bundle.size(r, n - 1) > 0.0).count();
            let se = (survivors >= MIN_SURVIVORS).then_some(se);
            (Some(residual_moment / (zeta.exp() * mean_prev)), Some(r3), se)
        } else {
            (None, None, None)
        };

        let centre = n0 * position.exp();
        let deviation = (0..reps).map(|r| (bundle.size(r, n) - centre).abs().powf(order)).sum::<f64>() / b;
        let ln_denominator = delta * (n as f64).ln() + n0.ln() + position + delta * position + ln_weight_sum;
        let r4 = ln_denominator.is_finite().then(|| (deviation.ln() - ln_denominator).exp());

        rows.push(DiagnosticRow { n, eta, xi, zeta, position, mean_size: mean_cur, r2, r3, r3_se, r4 });
    }
    Ok(rows)
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let hi = a.max(b);
    hi + ((a - hi).exp() + (b - hi).exp()).ln()
}
