//! Coupled replicate sweeps over a grid of starting sizes.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ks::ks_statistic_censored;
use crate::config::ExperimentConfig;
use crate::limit_law::ChiLaw;
use crate::model::conditions::{audit_conditions, ConditionReport};
use crate::model::Model;
use crate::rng::{stream, Purpose};
use crate::simulator::{CoupledRun, Outcome, RecordingMode, Simulator, Size, Trajectory};
use crate::walk::{default_max_steps, ln_squared};
use crate::{Error, Result};

/// One row of the per-replicate CSV.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub replicate_id: u64,
    pub n0: u64,
    pub tau: Option<u64>,
    pub censored: bool,
    pub theta: Option<u64>,
    pub n_theta: Option<Size>,
    pub n_theta_plus_k: Option<Size>,
    pub steps_run: u64,
    pub overflow: bool,
}

impl RunRecord {
    pub fn from_run(replicate_id: u64, n0: u64, run: &CoupledRun) -> Self {
        let outcome = run.trajectory.outcome;
        RunRecord {
            replicate_id,
            n0,
            tau: run.trajectory.tau,
            censored: outcome == Outcome::Censored,
            theta: run.theta,
            n_theta: run.n_at_theta,
            n_theta_plus_k: run.n_at_theta_plus_k,
            steps_run: run.steps_run,
            overflow: outcome == Outcome::Overflow,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaMethod {
    Analytic,
    MonteCarlo,
}

/// The `σ` of the reference law `χ_σ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaReference {
    pub value: f64,
    pub se: f64,
    pub method: SigmaMethod,
    pub samples: u64,
}

/// Analytic `σ` when `ξ` is affine in `η`, else the sample standard
/// deviation of `samples` draws of `ξ` (delta-method SE).
pub fn sigma_reference(model: &Model, samples: u64, seed: u64) -> Result<SigmaReference> {
    if let Some(value) = model.analytic_sigma() {
        return Ok(SigmaReference { value, se: 0.0, method: SigmaMethod::Analytic, samples: 0 });
    }
    if samples < 2 {
        return Err(Error::config("Monte Carlo sigma needs at least 2 samples"));
    }
    let mut rng = stream(seed, Purpose::Sigma, 0);
    Ok(monte_carlo_sigma(&xi_samples(model, samples as usize, &mut rng)?))
}

fn monte_carlo_sigma(xs: &[f64]) -> SigmaReference {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    let var = m2 * n / (n - 1.0);
    let value = var.sqrt();
    let se = if value > 0.0 { ((m4 - m2 * m2).max(0.0) / n).sqrt() / (2.0 * value) } else { 0.0 };
    SigmaReference { value, se, method: SigmaMethod::MonteCarlo, samples: xs.len() as u64 }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    #[serde(rename = "N")]
    pub n: u64,
    pub replicates: u64,
    pub max_steps: u64,
    /// Replicates alive at `max_steps`.
    pub censored_count: u64,
    pub theta_censored_count: u64,
    pub overflow_count: u64,
    /// Against `χ_σ`, over uncensored runs with censored ones kept in the
    /// denominator.
    pub ks_tau: f64,
    pub ks_theta: f64,
    /// Among runs with a known `N_θ`.
    pub frac_n_theta_pos: Option<f64>,
    /// Among runs with a known `N_{θ+k}`.
    pub frac_n_theta_k_pos: Option<f64>,
    /// Over uncensored runs.
    pub mean_tau_scaled: Option<f64>,
    /// Counting censored runs as beyond the cap; absent if they reach the middle.
    pub median_tau_scaled: Option<f64>,
    pub mean_theta_scaled: Option<f64>,
    pub median_theta_scaled: Option<f64>,
    pub k: u64,
    pub total_steps: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trends {
    pub ks_tau_decreasing: bool,
    pub frac_n_theta_pos_nondecreasing: bool,
    pub frac_n_theta_k_pos_nonincreasing: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuntimeStats {
    pub replicates_run: u64,
    pub total_steps: u64,
    pub overflow_count: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryReport {
    pub model: Model,
    pub sigma: SigmaReference,
    pub beta: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub replicates: u64,
    pub ks_tau_max: f64,
    pub ks_theta_max: f64,
    pub max_censored_fraction: f64,
    pub rows: Vec<GridRow>,
    pub trends: Trends,
    pub conditions: ConditionReport,
    pub runtime: RuntimeStats,
}

impl SummaryReport {
    pub fn row(&self, n: u64) -> Option<&GridRow> {
        self.rows.iter().find(|r| r.n == n)
    }
}

/// Replicates of one grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct GridRuns {
    pub n0: u64,
    pub max_steps: u64,
    pub records: Vec<RunRecord>,
}

impl GridRuns {
    /// `τ/ln²N` of uncensored runs, ascending.
    pub fn tau_scaled(&self) -> Vec<f64> {
        scaled(self.records.iter().filter_map(|r| r.tau), self.n0)
    }

    pub fn theta_scaled(&self) -> Vec<f64> {
        scaled(self.records.iter().filter_map(|r| r.theta), self.n0)
    }

    /// Runs whose `τ` is known or censored, i.e. not cut by overflow.
    pub fn tau_denominator(&self) -> usize {
        self.records.iter().filter(|r| !r.overflow).count()
    }

    pub fn cap_scaled(&self) -> f64 {
        self.max_steps as f64 / ln_squared(self.n0)
    }
}

fn scaled(values: impl Iterator<Item = u64>, n0: u64) -> Vec<f64> {
    let s = ln_squared(n0);
    let mut v: Vec<f64> = values.map(|t| t as f64 / s).collect();
    v.sort_by(f64::total_cmp);
    v
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentOutput {
    pub report: SummaryReport,
    pub runs: Vec<GridRuns>,
}

pub(crate) fn thread_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::config(format!("cannot start {threads} worker threads: {e}")))
}

/// Runs `replicates` coupled replicates at one starting size. Results are
/// in replicate order whatever the thread count.
pub fn run_grid_point(config: &ExperimentConfig, n0: u64, max_steps: u64) -> Result<GridRuns> {
    Ok(run_replicates(config, n0, max_steps, ReplicateKind::Coupled)?.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReplicateKind {
    /// Process only, until extinction; no `θ`.
    Extinction,
    Coupled,
}

/// Replicates at one starting size, with their trajectories unless the
/// recording mode is terminal.
pub fn run_replicates(
    config: &ExperimentConfig,
    n0: u64,
    max_steps: u64,
    kind: ReplicateKind,
) -> Result<(GridRuns, Vec<Trajectory>)> {
    let e = &config.experiment;
    let sim = Simulator::new(&config.model).with_policy(e.large_population);
    let beta = config.model.beta();
    let keep = e.recording != RecordingMode::Terminal;
    let results = thread_pool(e.threads)?.install(|| {
        (0..e.replicates)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream(e.seed, Purpose::Replicate, replicate_key(n0, i));
                let run = match kind {
                    ReplicateKind::Coupled => sim.run_coupled(n0, beta, e.epsilon, max_steps, &mut rng, e.recording)?,
                    ReplicateKind::Extinction => {
                        let trajectory = sim.run_until_extinction(n0, max_steps, &mut rng, e.recording)?;
                        let steps_run = trajectory.generations;
                        CoupledRun {
                            trajectory,
                            theta: None,
                            epsilon: e.epsilon,
                            k: 0,
                            n_at_theta: None,
                            n_at_theta_plus_k: None,
                            steps_run,
                        }
                    }
                };
                let record = RunRecord::from_run(i, n0, &run);
                Ok((record, keep.then_some(run.trajectory)))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let (records, trajectories): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    Ok((GridRuns { n0, max_steps, records }, trajectories.into_iter().flatten().collect()))
}

/// Replicates alive at the cap or cut by overflow, against the configured limit.
pub fn check_censoring(config: &ExperimentConfig, grid: &GridRuns) -> Result<()> {
    let lost = grid.records.iter().filter(|r| r.censored || r.overflow).count() as u64;
    let replicates = grid.records.len() as u64;
    let limit = config.experiment.max_censored_fraction;
    if lost as f64 > limit * replicates as f64 {
        return Err(Error::ExcessCensoring { n0: grid.n0, censored: lost, replicates, limit });
    }
    Ok(())
}

/// The cap from the config, else the default for `σ`.
pub fn step_cap(config: &ExperimentConfig, n0: u64, sigma: f64) -> Result<u64> {
    match config.experiment.max_steps {
        Some(cap) => Ok(cap),
        None => default_max_steps(n0, sigma),
    }
}

/// Stream index of replicate `i` at starting size `n0`; distinct grid
/// points use unrelated streams.
pub fn replicate_key(n0: u64, i: u64) -> u64 {
    n0.rotate_left(40) ^ i
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let e = &config.experiment;
    let model = &config.model;
    let sigma = sigma_reference(model, e.sigma_samples, e.seed)?;
    let law = ChiLaw::new(sigma.value).map_err(|_| {
        Error::DegenerateModel(format!("the associated walk has sigma = {}; no limit law", sigma.value))
    })?;
    let conditions = audit(model, e.audit_samples, e.seed)?;

    let mut rows = Vec::with_capacity(e.n_grid.len());
    let mut runs = Vec::with_capacity(e.n_grid.len());
    for &n0 in &e.n_grid {
        let grid = run_grid_point(config, n0, step_cap(config, n0, sigma.value)?)?;
        check_censoring(config, &grid)?;
        rows.push(summarize(&grid, &law, config)?);
        runs.push(grid);
    }

    let trends = Trends {
        ks_tau_decreasing: rows.windows(2).all(|w| w[1].ks_tau < w[0].ks_tau),
        frac_n_theta_pos_nondecreasing: monotone(&rows, |r| r.frac_n_theta_pos, |a, b| b >= a),
        frac_n_theta_k_pos_nonincreasing: monotone(&rows, |r| r.frac_n_theta_k_pos, |a, b| b <= a),
    };
    let runtime = RuntimeStats {
        replicates_run: rows.iter().map(|r| r.replicates).sum(),
        total_steps: rows.iter().map(|r| r.total_steps).sum(),
        overflow_count: rows.iter().map(|r| r.overflow_count).sum(),
    };
    let report = SummaryReport {
        model: model.clone(),
        sigma,
        beta: model.beta(),
        gamma: 2.0 / (1.0 + model.beta()),
        epsilon: e.epsilon,
        seed: e.seed,
        replicates: e.replicates,
        ks_tau_max: e.ks_tau_max,
        ks_theta_max: e.ks_theta_max,
        max_censored_fraction: e.max_censored_fraction,
        rows,
        trends,
        conditions,
        runtime,
    };
    Ok(ExperimentOutput { report, runs })
}

fn monotone(rows: &[GridRow], get: impl Fn(&GridRow) -> Option<f64>, ok: impl Fn(f64, f64) -> bool) -> bool {
    rows.windows(2).all(|w| match (get(&w[0]), get(&w[1])) {
        (Some(a), Some(b)) => ok(a, b),
        _ => false,
    })
}

pub fn audit(model: &Model, samples: u64, seed: u64) -> Result<ConditionReport> {
    let mut rng = stream(seed, Purpose::Audit, 0);
    audit_conditions(&model.rule, &model.environment, &model.offspring, samples, model.rule.name(), &mut rng)
}

fn summarize(grid: &GridRuns, law: &ChiLaw, config: &ExperimentConfig) -> Result<GridRow> {
    let records = &grid.records;
    let count = |f: &dyn Fn(&RunRecord) -> bool| records.iter().filter(|r| f(r)).count() as u64;
    let censored_count = count(&|r| r.censored);
    let overflow_count = count(&|r| r.overflow);
    let theta_censored_count = count(&|r| r.theta.is_none() && !r.overflow);

    let cap = grid.cap_scaled();
    let tau = grid.tau_scaled();
    let theta = grid.theta_scaled();
    let denominator = grid.tau_denominator();
    let theta_denominator = records.iter().filter(|r| r.theta.is_some() || !r.overflow).count();
    let ks_tau = ks_or_one(&tau, denominator, cap, law)?;
    let ks_theta = ks_or_one(&theta, theta_denominator, cap, law)?;

    Ok(GridRow {
        n: grid.n0,
        replicates: records.len() as u64,
        max_steps: grid.max_steps,
        censored_count,
        theta_censored_count,
        overflow_count,
        ks_tau,
        ks_theta,
        frac_n_theta_pos: positive_fraction(records.iter().filter_map(|r| r.n_theta)),
        frac_n_theta_k_pos: positive_fraction(records.iter().filter_map(|r| r.n_theta_plus_k)),
        mean_tau_scaled: mean(&tau),
        median_tau_scaled: median(&tau, denominator),
        mean_theta_scaled: mean(&theta),
        median_theta_scaled: median(&theta, theta_denominator),
        k: (config.experiment.epsilon * ln_squared(grid.n0)).floor() as u64,
        total_steps: records.iter().map(|r| r.steps_run).sum(),
    })
}

fn ks_or_one(observed: &[f64], total: usize, cap: f64, law: &ChiLaw) -> Result<f64> {
    if total == 0 {
        return Ok(1.0);
    }
    ks_statistic_censored(observed, total, cap, law)
}

fn positive_fraction(sizes: impl Iterator<Item = Size>) -> Option<f64> {
    let (mut pos, mut all) = (0u64, 0u64);
    for s in sizes {
        all += 1;
        pos += u64::from(!s.is_zero());
    }
    (all > 0).then(|| pos as f64 / all as f64)
}

fn mean(sorted: &[f64]) -> Option<f64> {
    (!sorted.is_empty()).then(|| sorted.iter().sum::<f64>() / sorted.len() as f64)
}

/// Median of `total` values of which `sorted` are the smallest.
fn median(sorted: &[f64], total: usize) -> Option<f64> {
    if total == 0 {
        return None;
    }
    let lo = (total - 1) / 2;
    let hi = total / 2;
    Some((*sorted.get(lo)? + *sorted.get(hi)?) / 2.0)
}

/// Draws `ξ` for `samples` environments of `model`.
pub fn xi_samples<R: Rng + ?Sized>(model: &Model, samples: usize, rng: &mut R) -> Result<Vec<f64>> {
    (0..samples).map(|_| model.xi(model.sample_env(rng))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{EnvironmentModel, MatingRule, MeanMap, OffspringModel};

    fn small() -> ExperimentConfig {
        let mut c = ExperimentConfig::default();
        c.experiment.n_grid = vec![100, 1000];
        c.experiment.replicates = 60;
        c.experiment.audit_samples = 200;
        c
    }

    #[test]
    fn canonical_sigma_is_exact() {
        let s = sigma_reference(&Model::canonical(0.37).unwrap(), 10, 1).unwrap();
        assert_eq!(s.value, 0.37);
        assert_eq!(s.method, SigmaMethod::Analytic);
    }

    #[test]
    fn monte_carlo_sigma_for_nonaffine_xi() {
        let model = Model {
            environment: EnvironmentModel::uniform(-1.0, 1.0).unwrap(),
            offspring: OffspringModel::poisson(MeanMap::exp_shifted(0.0), MeanMap::Constant { constant: 1.0 }),
            rule: MatingRule::monogamous(1),
        };
        assert_eq!(model.analytic_sigma(), None);
        let s = sigma_reference(&model, 200_000, 2).unwrap();
        // ξ = min(η, 0) with η ~ U(−1, 1): Var = 1/6 − 1/16.
        let exact = (1.0f64 / 6.0 - 1.0 / 16.0).sqrt();
        assert!((s.value - exact).abs() < 4.0 * s.se, "{} ± {} vs {exact}", s.value, s.se);
        assert_eq!(s.method, SigmaMethod::MonteCarlo);
    }

    #[test]
    fn median_with_censoring() {
        assert_eq!(median(&[1.0, 2.0, 3.0], 3), Some(2.0));
        assert_eq!(median(&[1.0, 2.0, 3.0], 4), Some(2.5));
        assert_eq!(median(&[1.0, 2.0], 5), None);
    }

    #[test]
    fn report_totals_reconcile() {
        let out = run_experiment(&small()).unwrap();
        for (row, grid) in out.report.rows.iter().zip(&out.runs) {
            assert_eq!(row.replicates, 60);
            let uncensored = grid.tau_scaled().len() as u64;
            assert_eq!(uncensored + row.censored_count + row.overflow_count, row.replicates);
            assert!(grid.tau_scaled().len() <= grid.records.len());
            assert!((0.0..=1.0).contains(&row.ks_tau) && (0.0..=1.0).contains(&row.ks_theta));
            for f in [row.frac_n_theta_pos, row.frac_n_theta_k_pos].into_iter().flatten() {
                assert!((0.0..=1.0).contains(&f));
            }
        }
        assert_eq!(out.report.sigma.value, 0.5);
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let one = run_experiment(&small()).unwrap();
        let mut config = small();
        config.experiment.threads = 3;
        let three = run_experiment(&config).unwrap();
        assert_eq!(one, three);
    }

    #[test]
    fn extinction_replicates_match_trajectories() {
        let mut config = small();
        config.experiment.recording = RecordingMode::Full;
        let (grid, trajectories) = run_replicates(&config, 500, 10_000, ReplicateKind::Extinction).unwrap();
        assert_eq!(trajectories.len(), 60);
        for (r, t) in grid.records.iter().zip(&trajectories) {
            assert_eq!(r.tau, t.tau);
            assert_eq!(r.theta, None);
            assert_eq!(r.steps_run, t.generations);
        }
        config.experiment.recording = RecordingMode::Terminal;
        assert!(run_replicates(&config, 500, 10_000, ReplicateKind::Extinction).unwrap().1.is_empty());
    }

    #[test]
    fn excess_censoring_aborts() {
        let mut config = small();
        config.experiment.max_steps = Some(2);
        assert!(matches!(run_experiment(&config), Err(Error::ExcessCensoring { .. })));
    }
}
