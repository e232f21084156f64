//! Simulation of critical bisexual branching processes in i.i.d. random
//! environments, their associated random walk, and the limit law of the
//! extinction time on the `ln² N` scale.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: environment law, per-couple offspring law, mating rules and
//!   executable audits of the regularity conditions C1–C7.
//! * [`walk`]: the associated random walk `S_n = Σ ξ_i` and its hitting time
//!   `θ` below the moving barrier `ln^γ N − ln N`.
//! * [`simulator`]: the process itself, coupled runs sharing one environment
//!   with the walk, and frozen-environment residual diagnostics.
//! * [`limit_law`]: the distribution `χ` of the scaled extinction time.
//! * [`stats`]: empirical CDFs, Kolmogorov–Smirnov distances, experiment
//!   sweeps and their CSV/JSON outputs.

pub mod config;
pub mod error;
pub mod limit_law;
pub mod model;
pub mod rng;
pub mod simulator;
pub mod stats;
pub mod walk;

pub use error::{Error, Result};
pub use limit_law::ChiLaw;
pub use model::{EnvironmentModel, MatingRule, Model, OffspringModel};
