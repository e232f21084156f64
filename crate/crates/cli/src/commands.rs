use std::path::Path;
use std::time::Instant;

use bbpre::config::ExperimentConfig;
use bbpre::limit_law::ChiLaw;
use bbpre::model::{EnvironmentModel, FemalesPerMale, MatingRule, Model, RuleKind};
use bbpre::stats::output::{
    to_json, write_diagnostics_csv, write_ecdf_csv, write_json, write_limit_law_table, write_runs_csv,
    write_trajectories_csv,
};
use bbpre::stats::{
    audit, check_censoring, lemma_bound_sweep, run_experiment, run_replicates, sigma_reference, step_cap, GridRuns,
    ReplicateKind,
};
use bbpre::{Error, Result};
use serde_json::json;

use crate::args::*;

pub fn dispatch(command: Command) -> Result<()> {
    let start = Instant::now();
    let result = match command {
        Command::Simulate(a) => replicates(&a.model, &a.run, a.n0, None, a.out.as_deref(), a.trajectories.as_deref(), ReplicateKind::Extinction),
        Command::Coupled(a) => replicates(&a.model, &a.run, a.n0, a.epsilon, a.out.as_deref(), a.trajectories.as_deref(), ReplicateKind::Coupled),
        Command::Audit(a) => audit_command(a),
        Command::Experiment(a) => experiment(a),
        Command::LimitLaw(a) => limit_law(a),
        Command::LemmaSweep(a) => lemma_sweep(a),
    };
    eprintln!("elapsed: {:.3}s", start.elapsed().as_secs_f64());
    result
}

fn load(flags: &ModelFlags) -> Result<ExperimentConfig> {
    let mut config = match &flags.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    apply_model_flags(&mut config.model, flags)?;
    Ok(config)
}

fn apply_model_flags(model: &mut Model, flags: &ModelFlags) -> Result<()> {
    if let Some(Preset::Canonical) = flags.model {
        *model = Model::canonical(0.5)?;
    }
    if let Some(sd) = flags.sigma_env {
        if !(sd.is_finite() && sd >= 0.0) {
            return Err(Error::config(format!("--sigma-env must lie in [0, inf), got {sd}")));
        }
        match &mut model.environment {
            EnvironmentModel::Normal { sd: current, .. } => *current = sd,
            EnvironmentModel::Uniform { .. } => {
                return Err(Error::config("--sigma-env needs a normal environment"));
            }
        }
    }
    if let Some(rule) = flags.rule {
        let (alpha, rho) = (model.rule.alpha, model.rule.rho);
        model.rule = match rule {
            RuleName::Monogamous => MatingRule::monogamous(1),
            RuleName::Polygamous => MatingRule::polygamous(),
            RuleName::Asexual => MatingRule::asexual(),
        }
        .with_alpha(alpha)
        .with_rho(rho);
    }
    if let Some(d) = flags.d {
        match &mut model.rule.kind {
            RuleKind::Monogamous { d: current } => *current = FemalesPerMale::Constant(d),
            _ => return Err(Error::config("--d applies to the monogamous rule only")),
        }
    }
    if let Some(alpha) = flags.alpha {
        model.rule.alpha = alpha;
    }
    if let Some(beta) = flags.beta {
        model.offspring.beta = beta;
    }
    Ok(())
}

fn apply_run_flags(config: &mut ExperimentConfig, run: &RunFlags) {
    let e = &mut config.experiment;
    if let Some(v) = run.replicates {
        e.replicates = v;
    }
    if let Some(v) = run.seed {
        e.seed = v;
    }
    if let Some(v) = run.threads {
        e.threads = v;
    }
    if run.max_steps.is_some() {
        e.max_steps = run.max_steps;
    }
    if let Some(v) = run.recording {
        e.recording = v.into();
    }
    if let Some(v) = run.large_population {
        e.large_population = v.into();
    }
}

fn replicates(
    model: &ModelFlags,
    run: &RunFlags,
    n0: Option<u64>,
    epsilon: Option<f64>,
    out: Option<&Path>,
    trajectories: Option<&Path>,
    kind: ReplicateKind,
) -> Result<()> {
    let mut config = load(model)?;
    apply_run_flags(&mut config, run);
    if let Some(eps) = epsilon {
        config.experiment.epsilon = eps;
    }
    let min = if kind == ReplicateKind::Coupled { 3 } else { 1 };
    let n0 = n0.unwrap_or(100_000);
    if n0 < min {
        return Err(Error::config(format!("--n0 must be at least {min}, got {n0}")));
    }
    config.experiment.n_grid = vec![n0.max(3)];
    config.validate()?;
    if trajectories.is_some() && config.experiment.recording == bbpre::simulator::RecordingMode::Terminal {
        return Err(Error::config("--trajectories needs --recording full or sparse"));
    }
    let sigma = sigma_reference(&config.model, config.experiment.sigma_samples, config.experiment.seed)?;
    let cap = step_cap(&config, n0, sigma.value)?;
    let (grid, paths) = run_replicates(&config, n0, cap, kind)?;
    if let Some(path) = out {
        write_runs_csv(path, std::slice::from_ref(&grid))?;
    }
    if let Some(path) = trajectories {
        write_trajectories_csv(path, grid.records.iter().map(|r| r.replicate_id).zip(&paths))?;
    }
    println!("{}", serde_json::to_string(&replicate_summary(&grid)).map_err(|e| Error::Io(e.to_string()))?);
    check_censoring(&config, &grid)
}

fn replicate_summary(grid: &GridRuns) -> serde_json::Value {
    let r = &grid.records;
    let count = |f: &dyn Fn(&bbpre::stats::RunRecord) -> bool| r.iter().filter(|x| f(x)).count();
    json!({
        "N0": grid.n0,
        "replicates": r.len(),
        "max_steps": grid.max_steps,
        "extinct": count(&|x| x.tau.is_some()),
        "censored": count(&|x| x.censored),
        "overflow": count(&|x| x.overflow),
        "theta_found": count(&|x| x.theta.is_some()),
        "N_theta_pos": count(&|x| x.n_theta.is_some_and(|s| !s.is_zero())),
        "N_theta_plus_k_pos": count(&|x| x.n_theta_plus_k.is_some_and(|s| !s.is_zero())),
    })
}

fn audit_command(a: AuditArgs) -> Result<()> {
    let config = load(&a.model)?;
    config.validate()?;
    let samples = a.samples.unwrap_or(config.experiment.audit_samples);
    let seed = a.seed.unwrap_or(config.experiment.seed);
    let report = audit(&config.model, samples, seed)?;
    match a.out {
        Some(path) => write_json(&path, &report),
        None => {
            print!("{}", to_json(&report)?);
            Ok(())
        }
    }
}

fn experiment(a: ExperimentArgs) -> Result<()> {
    let mut config = load(&a.model)?;
    apply_run_flags(&mut config, &a.run);
    if let Some(grid) = a.n_grid {
        config.experiment.n_grid = grid;
    }
    if let Some(eps) = a.epsilon {
        config.experiment.epsilon = eps;
    }
    if let Some(dir) = &a.out {
        std::fs::create_dir_all(dir)?;
        config.output.summary = Some(dir.join("summary.json"));
        config.output.runs = Some(dir.join("runs.csv"));
        config.output.ecdf = Some(dir.join("ecdf.csv"));
    }
    let out = run_experiment(&config)?;
    let o = &config.output;
    if let Some(path) = &o.runs {
        write_runs_csv(path, &out.runs)?;
    }
    if let Some(stem) = &o.ecdf {
        write_ecdf_csv(stem, &out.runs, &ChiLaw::new(out.report.sigma.value)?)?;
    }
    match &o.summary {
        Some(path) => write_json(path, &out.report)?,
        None => print!("{}", to_json(&out.report)?),
    }
    Ok(())
}

fn limit_law(a: LimitLawArgs) -> Result<()> {
    let law = ChiLaw::new(a.sigma).map_err(|_| Error::config(format!("--sigma must lie in (0, inf), got {}", a.sigma)))?;
    let (from, to, count) = parse_table(&a.table)?;
    write_limit_law_table(&a.out, &law, from, to, count)
}

fn parse_table(spec: &str) -> Result<(f64, f64, usize)> {
    let bad = || Error::config(format!("--table expects FROM:TO:COUNT with FROM < TO and COUNT ≥ 2, got {spec}"));
    let parts: Vec<&str> = spec.split(':').collect();
    let [from, to, count] = parts[..] else { return Err(bad()) };
    let from: f64 = from.parse().map_err(|_| bad())?;
    let to: f64 = to.parse().map_err(|_| bad())?;
    let count: usize = count.parse().map_err(|_| bad())?;
    if !(from.is_finite() && to.is_finite() && from < to) || count < 2 {
        return Err(bad());
    }
    Ok((from, to, count))
}

fn lemma_sweep(a: LemmaSweepArgs) -> Result<()> {
    let mut config = load(&a.model)?;
    let l = &mut config.lemma;
    if let Some(v) = a.n_grid {
        l.n_grid = v;
    }
    if let Some(v) = a.replicates {
        l.replicates = v;
    }
    if let Some(v) = a.paths {
        l.paths = v;
    }
    if let Some(v) = a.horizon {
        l.horizon = v;
    }
    if let Some(v) = a.seed {
        config.experiment.seed = v;
    }
    if let Some(v) = a.threads {
        config.experiment.threads = v;
    }
    let report = lemma_bound_sweep(&config)?;
    if let Some(path) = a.out.as_ref().or(config.output.diagnostics.as_ref()) {
        write_diagnostics_csv(path, &report)?;
    }
    let summary = json!({
        "n_grid": report.n_grid,
        "paths": report.paths,
        "replicates": report.replicates,
        "horizon": report.horizon,
        "r3_checked": report.r3_checked,
        "r3_unchecked": report.r3_unchecked,
        "r3_violations": report.r3_violations,
        "r3_max_z": report.r3_max_z,
        "r2_slope_n": report.r2_slope_n,
        "r2_slope_size": report.r2_slope_size,
        "r4_slope_n": report.r4_slope_n,
        "r4_slope_size": report.r4_slope_size,
        "any_growth": report.any_growth(),
    });
    print!("{}", to_json(&summary)?);
    Ok(())
}
