//! Acceptance criteria, one line per criterion. Set `BBPRE_ACCEPTANCE` to a
//! comma-separated list of criterion numbers to run a subset.

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use bbpre::config::ExperimentConfig;
use bbpre::model::conditions::{check_homogeneity, check_lipschitz, check_superadditivity_exhaustive, Condition, Status};
use bbpre::model::{EnvironmentModel, MatingRule, MeanMap, OffspringModel};
use bbpre::rng::{seeded, stream, Purpose};
use bbpre::simulator::{RecordingMode, Simulator};
use bbpre::stats::output::{write_diagnostics_csv, write_ecdf_csv, write_json, write_runs_csv};
use bbpre::stats::{audit, ks_statistic, lemma_bound_sweep, run_experiment, ExperimentOutput, LemmaReport, Slope};
use bbpre::{ChiLaw, Model};
use bbpre_validation::quadrature::log_scale_integral;
use bbpre_validation::simple_bpre::SimpleBpre;
use bbpre_validation::two_sample;
use rand::SeedableRng;

struct Verdict {
    id: u8,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn criterion_1() -> Verdict {
    let mut quad_err: f64 = 0.0;
    let mut norm_err: f64 = 0.0;
    let mut round_trip: f64 = 0.0;
    let mut inverse_err: f64 = 0.0;
    let mut round_trip_points = 0;
    for sigma in [0.5, 1.0, 2.0] {
        let law = ChiLaw::new(sigma).unwrap();
        for k in 0..=120 {
            let t = 10f64.powf(-3.0 + 6.0 * k as f64 / 120.0);
            let q = log_scale_integral(&|s| law.pdf(s), 1e-6, t, 1e-14);
            quad_err = quad_err.max((law.cdf(t) - q).abs());
            if let Ok(x) = law.quantile(law.cdf(t)) {
                round_trip = round_trip.max((x / t - 1.0).abs());
                round_trip_points += 1;
            }
        }
        for k in 1..1000 {
            let q = k as f64 / 1000.0;
            inverse_err = inverse_err.max((law.cdf(law.quantile(q).unwrap()) - q).abs());
        }
        norm_err = norm_err.max((log_scale_integral(&|s| law.pdf(s), 1e-6, 60f64.exp(), 1e-14) - 1.0).abs());
    }
    let law = ChiLaw::new(1.0).unwrap();
    let mut rng = seeded(1);
    let samples: Vec<f64> = (0..100_000).map(|_| law.sample(&mut rng)).collect();
    let ks = ks_statistic(&samples, &law).unwrap();
    let one = (law.quantile(law.cdf(1.0)).unwrap() - 1.0).abs();
    Verdict {
        id: 1,
        title: "limit-law internal consistency",
        pass: quad_err <= 1e-8 && norm_err <= 1e-8 && ks <= 0.01 && round_trip <= 1e-9 && one <= 1e-9 && inverse_err <= 1e-10,
        detail: format!(
            "max|cdf - quadrature| = {quad_err:.2e}, |integral - 1| = {norm_err:.2e}, sampler KS = {ks:.4} (1e5 draws), max|quantile(cdf(t))/t - 1| = {:.2e} over {round_trip_points} grid points with 0 < cdf < 1, max|cdf(quantile(q)) - q| = {inverse_err:.2e}",
            round_trip.max(one)
        ),
    }
}

fn grid_list(out: &ExperimentOutput, f: impl Fn(&bbpre::stats::GridRow) -> String) -> String {
    out.report.rows.iter().map(|r| format!("N={:.0e}: {}", r.n as f64, f(r))).collect::<Vec<_>>().join(", ")
}

fn opt(v: Option<f64>) -> String {
    v.map_or("n/a".into(), |v| format!("{v:.4}"))
}

fn criteria_2_to_4() -> Vec<Verdict> {
    let mut config = ExperimentConfig::default();
    config.experiment.threads = threads();
    let start = Instant::now();
    let out = run_experiment(&config).expect("canonical experiment");
    eprintln!("canonical grid experiment: {:.1}s", start.elapsed().as_secs_f64());
    let report = &out.report;
    let last = report.rows.last().unwrap();
    assert_eq!(last.n, 100_000_000);
    let censoring = grid_list(&out, |r| format!("{}/{}", r.censored_count, r.replicates));

    let c2 = Verdict {
        id: 2,
        title: "extinction time vs limit law",
        pass: report.trends.ks_tau_decreasing && last.ks_tau <= 0.08,
        detail: format!(
            "KS(tau/ln^2 N) {}; strictly decreasing: {}; at N=1e8 {:.4} vs threshold 0.08; censored {censoring}",
            grid_list(&out, |r| format!("{:.4}", r.ks_tau)),
            report.trends.ks_tau_decreasing,
            last.ks_tau
        ),
    };
    let c3 = Verdict {
        id: 3,
        title: "walk hitting time vs limit law",
        pass: last.ks_theta <= 0.06,
        detail: format!(
            "KS(theta/ln^2 N) {}; at N=1e8 {:.4} vs threshold 0.06 (beta = {})",
            grid_list(&out, |r| format!("{:.4}", r.ks_theta)),
            last.ks_theta,
            report.beta
        ),
    };
    let pos = last.frac_n_theta_pos.unwrap_or(0.0);
    let pos_k = last.frac_n_theta_k_pos.unwrap_or(1.0);
    let c4 = Verdict {
        id: 4,
        title: "population at theta and theta+k",
        pass: pos >= 0.95
            && pos_k <= 0.10
            && report.trends.frac_n_theta_pos_nondecreasing
            && report.trends.frac_n_theta_k_pos_nonincreasing,
        detail: format!(
            "frac(N_theta > 0) {} (needs >= 0.95 at 1e8, nondecreasing: {}); frac(N_theta+k > 0) {} (needs <= 0.10 at 1e8, nonincreasing: {}); eps = {}",
            grid_list(&out, |r| opt(r.frac_n_theta_pos)),
            report.trends.frac_n_theta_pos_nondecreasing,
            grid_list(&out, |r| opt(r.frac_n_theta_k_pos)),
            report.trends.frac_n_theta_k_pos_nonincreasing,
            report.epsilon
        ),
    };
    vec![c2, c3, c4]
}

fn slope(s: Option<Slope>) -> String {
    s.map_or("n/a".into(), |s| format!("{:+.3} ± {:.3}", s.value, s.se))
}

fn criteria_5_and_6() -> Vec<Verdict> {
    let mut config = ExperimentConfig::default();
    config.experiment.threads = threads();
    let report: LemmaReport = lemma_bound_sweep(&config).expect("lemma sweep");
    let c5 = Verdict {
        id: 5,
        title: "conditional mean inequality",
        pass: report.r3_violations == 0 && report.r3_checked > 0,
        detail: format!(
            "{} paths x {} replicates, n <= {}, N in {:?}: {} hard violations of r3 <= 1 + 4 SE among {} checked points (max z = {}); {} points with fewer than 30 survivors left unchecked",
            report.paths,
            report.replicates,
            report.horizon,
            report.n_grid,
            report.r3_violations,
            report.r3_checked,
            opt(report.r3_max_z),
            report.r3_unchecked
        ),
    };
    let c6 = Verdict {
        id: 6,
        title: "residual ratio boundedness",
        pass: !report.any_growth(),
        detail: format!(
            "log-log slopes (growth if > 2 SE): r2 in n {}, r2 in N {}, r4 in n {}, r4 in N {}",
            slope(report.r2_slope_n),
            slope(report.r2_slope_size),
            slope(report.r4_slope_n),
            slope(report.r4_slope_size)
        ),
    };
    vec![c5, c6]
}

fn criterion_7() -> Verdict {
    let rules = [
        MatingRule::monogamous(1),
        MatingRule::monogamous(2),
        MatingRule::monogamous(5),
        MatingRule::polygamous(),
        MatingRule::asexual(),
    ];
    let env = EnvironmentModel::normal(0.0, 0.5).unwrap();
    let mut superadditive = 0;
    let mut lipschitz = 0;
    let mut homogeneity = 0;
    let mut rng = seeded(7);
    for rule in &rules {
        for z in [-1.0, 0.0, 1.0] {
            superadditive += check_superadditivity_exhaustive(rule, 20, z).violations;
        }
        lipschitz += check_lipschitz(rule, &env, 100_000, 1e4, &mut rng).violations;
        homogeneity += check_homogeneity(rule, &env, 100_000, 1e4, &mut rng).violations;
    }
    let critical = audit(&Model::canonical(0.5).unwrap(), 10_000, 7).unwrap();
    let shifted_model = Model {
        offspring: OffspringModel::poisson(MeanMap::exp_shifted(0.1), MeanMap::exp_shifted(0.1)),
        ..Model::canonical(0.5).unwrap()
    };
    let shifted = audit(&shifted_model, 10_000, 7).unwrap();
    let c7 = |r: &bbpre::model::conditions::ConditionReport| r.verdict(Condition::C7).unwrap().status;
    Verdict {
        id: 7,
        title: "condition suite",
        pass: superadditive == 0
            && lipschitz == 0
            && homogeneity == 0
            && c7(&critical) == Status::Pass
            && c7(&shifted) == Status::Fail,
        detail: format!(
            "superadditivity violations on [0,20]^4 = {superadditive}, Lipschitz violations (1e5 tuples/rule) = {lipschitz}, homogeneity violations (1e5 tuples/rule) = {homogeneity}, criticality canonical = {:?}, +0.1 shifted = {:?}",
            c7(&critical),
            c7(&shifted)
        ),
    }
}

fn criterion_8() -> Verdict {
    let (sigma, n0, cap, replicates) = (0.5, 100u64, 1000u64, 10_000u64);
    let model = Model { rule: MatingRule::asexual(), ..Model::canonical(sigma).unwrap() };
    let sim = Simulator::new(&model);
    let censored_value = (cap + 1) as f64;
    let ours: Vec<f64> = (0..replicates)
        .map(|i| {
            let t = sim.run_until_extinction(n0, cap, &mut stream(8, Purpose::Replicate, i), RecordingMode::Terminal).unwrap();
            t.tau.map_or(censored_value, |t| t as f64)
        })
        .collect();
    let oracle = SimpleBpre { sigma, z0: n0 };
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(88);
    let reference: Vec<f64> =
        (0..replicates).map(|_| oracle.sample_tau(cap, &mut rng).map_or(censored_value, |t| t as f64)).collect();
    let d = two_sample::ks_distance(&ours, &reference);
    let critical = two_sample::critical_value(0.01, ours.len(), reference.len());
    let censored = |v: &[f64]| v.iter().filter(|&&x| x == censored_value).count();
    Verdict {
        id: 8,
        title: "asexual reduction oracle",
        pass: d <= critical,
        detail: format!(
            "two-sample KS = {d:.4} vs critical {critical:.4} at level 0.01 (N0 = {n0}, {replicates} replicates each, cap {cap}; censored {} / {})",
            censored(&ours),
            censored(&reference)
        ),
    }
}

fn run_outputs(config: &ExperimentConfig, dir: &Path) {
    std::fs::create_dir_all(dir).unwrap();
    let out = run_experiment(config).unwrap();
    write_json(&dir.join("summary.json"), &out.report).unwrap();
    write_runs_csv(&dir.join("runs.csv"), &out.runs).unwrap();
    write_ecdf_csv(&dir.join("ecdf.csv"), &out.runs, &ChiLaw::new(out.report.sigma.value).unwrap()).unwrap();
    let sweep = lemma_bound_sweep(config).unwrap();
    write_diagnostics_csv(&dir.join("diagnostics.csv"), &sweep).unwrap();
    write_json(&dir.join("lemma.json"), &sweep).unwrap();
}

fn criterion_9() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let mut config = ExperimentConfig::default();
    config.experiment.n_grid = vec![100, 1000, 10_000];
    config.experiment.replicates = 300;
    config.experiment.seed = 2024;
    config.lemma.n_grid = vec![100, 1000];
    config.lemma.paths = 3;
    config.lemma.replicates = 500;
    config.lemma.horizon = 20;
    config.experiment.threads = 1;
    run_outputs(&config, &tmp.path().join("a"));
    run_outputs(&config, &tmp.path().join("b"));
    config.experiment.threads = 4;
    run_outputs(&config, &tmp.path().join("c"));

    let mut files: Vec<String> = std::fs::read_dir(tmp.path().join("a"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    files.sort();
    let read = |sub: &str, f: &str| std::fs::read(tmp.path().join(sub).join(f)).unwrap();
    let rerun_diff: Vec<&String> = files.iter().filter(|f| read("a", f) != read("b", f)).collect();
    let thread_diff: Vec<&String> = files.iter().filter(|f| read("a", f) != read("c", f)).collect();
    Verdict {
        id: 9,
        title: "determinism",
        pass: rerun_diff.is_empty() && thread_diff.is_empty() && files.len() >= 6,
        detail: format!(
            "{} output files compared; differing on rerun: {rerun_diff:?}; differing with 4 threads vs 1: {thread_diff:?}",
            files.len()
        ),
    }
}

fn main() -> ExitCode {
    let selected: Option<Vec<u8>> = std::env::var("BBPRE_ACCEPTANCE")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let wanted = |ids: &[u8]| selected.as_ref().is_none_or(|s| ids.iter().any(|i| s.contains(i)));

    let start = Instant::now();
    let mut verdicts = Vec::new();
    if wanted(&[1]) {
        verdicts.push(criterion_1());
    }
    if wanted(&[2, 3, 4]) {
        verdicts.extend(criteria_2_to_4());
    }
    if wanted(&[5, 6]) {
        verdicts.extend(criteria_5_and_6());
    }
    if wanted(&[7]) {
        verdicts.push(criterion_7());
    }
    if wanted(&[8]) {
        verdicts.push(criterion_8());
    }
    if wanted(&[9]) {
        verdicts.push(criterion_9());
    }
    verdicts.retain(|v| wanted(&[v.id]));

    println!();
    println!("acceptance criteria");
    for v in &verdicts {
        println!("criterion {} [{}] {}: {}", v.id, if v.pass { "PASS" } else { "FAIL" }, v.title, v.detail);
    }
    let failed = verdicts.iter().filter(|v| !v.pass).count();
    println!("{} passed, {failed} failed ({:.1}s)", verdicts.len() - failed, start.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
