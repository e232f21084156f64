//! Frozen-environment sweep of the residual and mean ratios over a grid of
//! starting sizes.

use serde::{Deserialize, Serialize};

use super::experiment::thread_pool;
use crate::config::ExperimentConfig;
use crate::simulator::{residual_diagnostics, run_frozen_bundle};
use crate::Result;

/// Ratios at generation `n` of path `path` started from `n0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub n0: u64,
    pub path: u64,
    pub n: u64,
    pub r2: Option<f64>,
    pub r3: Option<f64>,
    pub r3_se: Option<f64>,
    pub r4: Option<f64>,
}

impl SweepPoint {
    /// `(r3 − 1)/SE`; large positive values contradict `r3 ≤ 1`.
    pub fn r3_z(&self) -> Option<f64> {
        match (self.r3, self.r3_se) {
            (Some(r), Some(se)) if se > 0.0 => Some((r - 1.0) / se),
            (Some(r), Some(_)) if r != 1.0 => Some(if r > 1.0 { f64::INFINITY } else { f64::NEG_INFINITY }),
            (Some(_), Some(_)) => Some(0.0),
            _ => None,
        }
    }
}

/// Maxima over paths at one `(n0, n)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioMax {
    pub n0: u64,
    pub n: u64,
    pub max_r2: Option<f64>,
    pub max_r3: Option<f64>,
    pub max_r4: Option<f64>,
}

/// Log-log slope averaged over independent paths, with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Slope {
    pub value: f64,
    pub se: f64,
    pub paths: u64,
}

impl Slope {
    /// Positive beyond two standard errors.
    pub fn grows(&self) -> bool {
        self.value > 2.0 * self.se
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub n_grid: Vec<u64>,
    pub paths: u64,
    pub replicates: u64,
    pub horizon: u64,
    pub seed: u64,
    pub points: Vec<SweepPoint>,
    pub maxima: Vec<RatioMax>,
    pub r3_checked: u64,
    /// Points with `r3` defined but too few survivors for an SE.
    pub r3_unchecked: u64,
    /// Points with `r3 > 1 + 4·SE`.
    pub r3_violations: u64,
    pub r3_max_z: Option<f64>,
    pub r2_slope_n: Option<Slope>,
    pub r2_slope_size: Option<Slope>,
    pub r4_slope_n: Option<Slope>,
    pub r4_slope_size: Option<Slope>,
}

impl LemmaReport {
    pub fn any_growth(&self) -> bool {
        [self.r2_slope_n, self.r2_slope_size, self.r4_slope_n, self.r4_slope_size]
            .iter()
            .any(|s| s.is_none_or(|s| s.grows()))
    }
}

/// Runs `paths` frozen environments, each shared by every starting size in
/// the lemma grid, with `replicates` offspring randomizations per bundle.
pub fn lemma_bound_sweep(config: &ExperimentConfig) -> Result<LemmaReport> {
    config.validate()?;
    let l = &config.lemma;
    let seed = config.experiment.seed;
    let pool = thread_pool(config.experiment.threads)?;
    let mut points = Vec::new();
    for &n0 in &l.n_grid {
        for path in 0..l.paths {
            let bundle = pool.install(|| {
                run_frozen_bundle(&config.model, n0, l.horizon as usize, l.replicates as usize, seed, path)
            })?;
            for row in residual_diagnostics(&bundle, &config.model)? {
                points.push(SweepPoint {
                    n0,
                    path,
                    n: row.n as u64,
                    r2: row.r2,
                    r3: row.r3,
                    r3_se: row.r3_se,
                    r4: row.r4,
                });
            }
        }
    }

    let mut maxima = Vec::new();
    for &n0 in &l.n_grid {
        for n in 1..=l.horizon {
            let at = || points.iter().filter(move |p| p.n0 == n0 && p.n == n);
            maxima.push(RatioMax {
                n0,
                n,
                max_r2: max_of(at().filter_map(|p| p.r2)),
                max_r3: max_of(at().filter_map(|p| p.r3)),
                max_r4: max_of(at().filter_map(|p| p.r4)),
            });
        }
    }

    let zs: Vec<f64> = points.iter().filter_map(SweepPoint::r3_z).collect();
    let r2 = |p: &SweepPoint| p.r2;
    let r4 = |p: &SweepPoint| p.r4;
    Ok(LemmaReport {
        n_grid: l.n_grid.clone(),
        paths: l.paths,
        replicates: l.replicates,
        horizon: l.horizon,
        seed,
        r3_checked: zs.len() as u64,
        r3_unchecked: points.iter().filter(|p| p.r3.is_some() && p.r3_z().is_none()).count() as u64,
        r3_violations: zs.iter().filter(|&&z| z > 4.0).count() as u64,
        r3_max_z: max_of(zs.iter().copied()),
        r2_slope_n: path_slope(&points, l.paths, r2, Axis::Generation),
        r2_slope_size: path_slope(&points, l.paths, r2, Axis::Size),
        r4_slope_n: path_slope(&points, l.paths, r4, Axis::Generation),
        r4_slope_size: path_slope(&points, l.paths, r4, Axis::Size),
        points,
        maxima,
    })
}

fn max_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    values.fold(None, |m, v| Some(m.map_or(v, |m: f64| m.max(v))))
}

#[derive(Clone, Copy, PartialEq)]
enum Axis {
    Generation,
    Size,
}

/// Slope of `ln r` against `ln n` (fixed path and `N`) or against `ln N`
/// (fixed path and `n`). Paths are independent, so each contributes the
/// mean of its within-group slopes and the SE is taken across paths.
fn path_slope(points: &[SweepPoint], paths: u64, ratio: impl Fn(&SweepPoint) -> Option<f64>, axis: Axis) -> Option<Slope> {
    let mut per_path = Vec::new();
    for path in 0..paths {
        let mine: Vec<&SweepPoint> = points.iter().filter(|p| p.path == path).collect();
        let mut keys: Vec<u64> = mine.iter().map(|p| if axis == Axis::Generation { p.n0 } else { p.n }).collect();
        keys.sort_unstable();
        keys.dedup();
        let mut slopes = Vec::new();
        for key in keys {
            let xy: Vec<(f64, f64)> = mine
                .iter()
                .filter(|p| key == if axis == Axis::Generation { p.n0 } else { p.n })
                .filter_map(|p| {
                    let r = ratio(p).filter(|r| *r > 0.0 && r.is_finite())?;
                    let x = if axis == Axis::Generation { p.n as f64 } else { p.n0 as f64 };
                    Some((x.ln(), r.ln()))
                })
                .collect();
            if let Some(b) = ols_slope(&xy) {
                slopes.push(b);
            }
        }
        if !slopes.is_empty() {
            per_path.push(slopes.iter().sum::<f64>() / slopes.len() as f64);
        }
    }
    if per_path.len() < 2 {
        return None;
    }
    let m = per_path.len() as f64;
    let value = per_path.iter().sum::<f64>() / m;
    let var = per_path.iter().map(|s| (s - value).powi(2)).sum::<f64>() / (m - 1.0);
    Some(Slope { value, se: (var / m).sqrt(), paths: per_path.len() as u64 })
}

fn ols_slope(xy: &[(f64, f64)]) -> Option<f64> {
    if xy.len() < 2 {
        return None;
    }
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx = xy.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    let sxy = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>();
    (sxx > 0.0).then(|| sxy / sxx)
}
