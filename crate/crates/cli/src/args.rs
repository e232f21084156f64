use std::path::PathBuf;

use bbpre::simulator::{LargePopulation, RecordingMode};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "bbpre", version, about = "Critical bisexual branching processes in random environment")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run replicates until extinction and write one CSV row per replicate.
    Simulate(SimulateArgs),
    /// Run process and associated walk on shared environments (τ, θ, N_θ, N_θ+k).
    Coupled(CoupledArgs),
    /// Check the structural conditions and criticality of a model.
    Audit(AuditArgs),
    /// Sweep a grid of starting sizes and compare τ/ln²N and θ/ln²N with the limit law.
    Experiment(ExperimentArgs),
    /// Tabulate the limit law's pdf and cdf.
    LimitLaw(LimitLawArgs),
    /// Frozen-environment sweep of the residual and mean ratios.
    LemmaSweep(LemmaSweepArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// η ~ N(0, σ²), Poisson(e^η) daughters and sons, monogamous d = 1.
    Canonical,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RuleName {
    Monogamous,
    Polygamous,
    Asexual,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Recording {
    Full,
    Sparse,
    Terminal,
}

impl From<Recording> for RecordingMode {
    fn from(r: Recording) -> Self {
        match r {
            Recording::Full => RecordingMode::Full,
            Recording::Sparse => RecordingMode::Sparse,
            Recording::Terminal => RecordingMode::Terminal,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Policy {
    /// Carry populations above 2^60 expected offspring on a log scale.
    Continuum,
    /// Stop the replicate with an overflow tag.
    Abort,
}

impl From<Policy> for LargePopulation {
    fn from(p: Policy) -> Self {
        match p {
            Policy::Continuum => LargePopulation::Continuum,
            Policy::Abort => LargePopulation::Abort,
        }
    }
}

/// Model selection; flags override the config file.
#[derive(Debug, Args)]
pub struct ModelFlags {
    /// TOML configuration file
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Model preset, replacing the config file's model
    #[arg(long, value_enum, value_name = "NAME")]
    pub model: Option<Preset>,
    /// Mating rule
    #[arg(long, value_enum, value_name = "RULE")]
    pub rule: Option<RuleName>,
    /// Standard deviation of the normal environment η (dimensionless, ≥ 0)
    #[arg(long, value_name = "SD")]
    pub sigma_env: Option<f64>,
    /// Residual exponent α of the mating approximation, in (0, 1)
    #[arg(long, value_name = "ALPHA")]
    pub alpha: Option<f64>,
    /// Offspring moment order β (> 1); also sets γ = 2/(1+β) in the walk threshold
    #[arg(long, value_name = "BETA")]
    pub beta: Option<f64>,
    /// Females per male under the monogamous rule (count ≥ 0)
    #[arg(long, value_name = "COUNT")]
    pub d: Option<u64>,
}

/// Replicate execution.
#[derive(Debug, Args)]
pub struct RunFlags {
    /// Replicates per starting size (count ≥ 1)
    #[arg(long, value_name = "COUNT")]
    pub replicates: Option<u64>,
    /// Master seed (64-bit unsigned)
    #[arg(long, value_name = "SEED")]
    pub seed: Option<u64>,
    /// Worker threads (count ≥ 1); results do not depend on it
    #[arg(long, value_name = "COUNT")]
    pub threads: Option<usize>,
    /// Step cap in generations (count ≥ 1); default leaves 0.5% of the limit law beyond it
    #[arg(long, value_name = "STEPS")]
    pub max_steps: Option<u64>,
    /// Trajectory recording mode
    #[arg(long, value_enum, value_name = "MODE")]
    pub recording: Option<Recording>,
    /// Handling of populations too large for exact counts
    #[arg(long, value_enum, value_name = "POLICY")]
    pub large_population: Option<Policy>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelFlags,
    #[command(flatten)]
    pub run: RunFlags,
    /// Initial number of couples (count ≥ 1)
    #[arg(long, value_name = "COUPLES")]
    pub n0: Option<u64>,
    /// Per-replicate CSV output
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Per-step CSV output (needs --recording full or sparse)
    #[arg(long, value_name = "PATH")]
    pub trajectories: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CoupledArgs {
    #[command(flatten)]
    pub model: ModelFlags,
    #[command(flatten)]
    pub run: RunFlags,
    /// Initial number of couples (count ≥ 3)
    #[arg(long, value_name = "COUPLES")]
    pub n0: Option<u64>,
    /// Lag factor ε > 0; k = ⌊ε ln² N0⌋ generations
    #[arg(long, value_name = "EPS")]
    pub epsilon: Option<f64>,
    /// Per-replicate CSV output
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Per-step CSV output (needs --recording full or sparse)
    #[arg(long, value_name = "PATH")]
    pub trajectories: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    #[command(flatten)]
    pub model: ModelFlags,
    /// Random environment draws per check (count ≥ 100)
    #[arg(long, value_name = "COUNT")]
    pub samples: Option<u64>,
    /// Master seed (64-bit unsigned)
    #[arg(long, value_name = "SEED")]
    pub seed: Option<u64>,
    /// JSON report output (stdout when absent)
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[command(flatten)]
    pub model: ModelFlags,
    #[command(flatten)]
    pub run: RunFlags,
    /// Comma-separated, strictly increasing starting sizes (counts ≥ 3)
    #[arg(long, value_name = "N,N,...", value_delimiter = ',')]
    pub n_grid: Option<Vec<u64>>,
    /// Lag factor ε > 0; k = ⌊ε ln² N⌋ generations
    #[arg(long, value_name = "EPS")]
    pub epsilon: Option<f64>,
    /// Output directory for summary.json, runs.csv and ecdf_N<N>.csv
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LimitLawArgs {
    /// Scale σ > 0 of the law
    #[arg(long, value_name = "SIGMA")]
    pub sigma: f64,
    /// Evenly spaced grid FROM:TO:COUNT in units of ln² N
    #[arg(long, value_name = "FROM:TO:COUNT")]
    pub table: String,
    /// CSV output with columns t, pdf, cdf
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct LemmaSweepArgs {
    #[command(flatten)]
    pub model: ModelFlags,
    /// Comma-separated, strictly increasing starting sizes (counts ≥ 1)
    #[arg(long, value_name = "N,N,...", value_delimiter = ',')]
    pub n_grid: Option<Vec<u64>>,
    /// Offspring randomizations per frozen environment (count ≥ 2)
    #[arg(long, value_name = "COUNT")]
    pub replicates: Option<u64>,
    /// Frozen environment paths (count ≥ 1)
    #[arg(long, value_name = "COUNT")]
    pub paths: Option<u64>,
    /// Generations per path (count ≥ 1)
    #[arg(long, value_name = "STEPS")]
    pub horizon: Option<u64>,
    /// Master seed (64-bit unsigned)
    #[arg(long, value_name = "SEED")]
    pub seed: Option<u64>,
    /// Worker threads (count ≥ 1)
    #[arg(long, value_name = "COUNT")]
    pub threads: Option<usize>,
    /// Per-point CSV output (N0, path, n, r2, r3, r3_se, r4)
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}
