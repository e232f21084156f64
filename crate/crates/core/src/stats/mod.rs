//! Experiment orchestration and inference: replicate sweeps, empirical
//! distribution functions, KS distances against `χ`, and the
//! frozen-environment ratio sweep.

mod experiment;
mod ks;
mod lemma;
pub mod output;

pub use crate::config::ExperimentConfig;
pub use experiment::{
    audit, check_censoring, replicate_key, run_experiment, run_grid_point, run_replicates, step_cap, sigma_reference, xi_samples, ExperimentOutput, GridRow,
    GridRuns, ReplicateKind, RunRecord, RuntimeStats, SigmaMethod, SigmaReference, SummaryReport, Trends,
};
pub use ks::{ks_statistic, ks_statistic_censored, two_sample_critical_value, two_sample_ks, EmpiricalCdf};
pub use lemma::{lemma_bound_sweep, LemmaReport, RatioMax, Slope, SweepPoint};
