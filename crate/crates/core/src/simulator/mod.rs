//! Evolution of the process
//! `N_{n+1} = L(Σ_{j ≤ N_n} F_{n+1,j}, Σ_{j ≤ N_n} M_{n+1,j}, η_{n+1})`,
//! alone or coupled with its associated random walk on one environment
//! sequence.
//!
//! Population sizes are exact `u64` counts while the offspring means stay
//! below [`CONTINUUM_ENTRY`]. Larger populations are carried as `ln N` with
//! Gaussian offspring totals and the approximant `g` in place of `L`
//! ([`LargePopulation::Continuum`]); they return to exact counts once they
//! fall below [`CONTINUUM_EXIT`]. Under [`LargePopulation::Abort`] the run
//! stops with an overflow tag instead.

mod diagnostics;

pub use diagnostics::{residual_diagnostics, run_frozen_bundle, DiagnosticRow, FrozenBundle, MIN_SURVIVORS};

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::model::{Mating, MatingRule, Model, OffspringModel, COUNT_GUARD};
use crate::walk::{ln_squared, HittingSpec};
use crate::{Error, Result};

/// Offspring mean above which the continuum representation takes over.
pub const CONTINUUM_ENTRY: f64 = (1u64 << 60) as f64;
/// Size below which a continuum population is rounded back to a count.
pub const CONTINUUM_EXIT: f64 = (1u64 << 52) as f64;

/// A population size: an exact count, or `ln N` for huge populations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Size {
    Exact(u64),
    Large(f64),
}

impl Size {
    pub const ZERO: Size = Size::Exact(0);

    fn from_ln(ln: f64) -> Size {
        if ln < CONTINUUM_EXIT.ln() {
            Size::Exact(ln.exp().round() as u64)
        } else {
            Size::Large(ln)
        }
    }

    pub fn value(&self) -> f64 {
        match *self {
            Size::Exact(n) => n as f64,
            Size::Large(ln) => ln.exp(),
        }
    }

    pub fn ln(&self) -> f64 {
        match *self {
            Size::Exact(n) => (n as f64).ln(),
            Size::Large(ln) => ln,
        }
    }

    pub fn is_zero(&self) -> bool {
        *self == Size::ZERO
    }

    pub fn exact(&self) -> Option<u64> {
        match *self {
            Size::Exact(n) => Some(n),
            Size::Large(_) => None,
        }
    }
}

impl fmt::Display for Size {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Size::Exact(n) => write!(f, "{n}"),
            Size::Large(ln) => write!(f, "{:.9e}", ln.exp()),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LargePopulation {
    #[default]
    Continuum,
    Abort,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordingMode {
    Full,
    /// Every `⌈ln N0⌉`-th step and the last one.
    Sparse,
    #[default]
    Terminal,
}

impl std::str::FromStr for RecordingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(RecordingMode::Full),
            "sparse" => Ok(RecordingMode::Sparse),
            "terminal" => Ok(RecordingMode::Terminal),
            other => Err(Error::config(format!("recording must be one of full|sparse|terminal, got {other}"))),
        }
    }
}

/// One generation of a trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub n: u64,
    pub eta: f64,
    pub females: Size,
    pub males: Size,
    pub pairs: Size,
    pub xi: f64,
    /// `S_n`.
    pub position: f64,
    /// `R_n = N_n − N_{n−1}·e^{ξ_n}`.
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Extinct,
    Censored,
    Overflow,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub n0: u64,
    pub recording: RecordingMode,
    pub steps: Vec<Step>,
    pub outcome: Outcome,
    /// First `n` with `N_n = 0`.
    pub tau: Option<u64>,
    /// Generations the process was evolved for.
    pub generations: u64,
    pub final_size: Size,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoupledRun {
    pub trajectory: Trajectory,
    pub theta: Option<u64>,
    pub epsilon: f64,
    /// `⌊ε ln² N0⌋`.
    pub k: u64,
    pub n_at_theta: Option<Size>,
    pub n_at_theta_plus_k: Option<Size>,
    /// Walk steps taken, at least `generations`.
    pub steps_run: u64,
}

/// `(N_next, F_total, M_total)` for an exact population, errors on overflow.
pub fn evolve_step<R: Rng + ?Sized>(
    rule: &dyn Mating,
    offspring: &OffspringModel,
    n_prev: u64,
    eta: f64,
    rng: &mut R,
) -> Result<(u64, u64, u64)> {
    if n_prev == 0 {
        return Ok((0, 0, 0));
    }
    let (f, m) = offspring.offspring_totals(n_prev, eta, rng)?;
    let pairs = rule.mate(f, m, eta);
    if pairs > COUNT_GUARD {
        return Err(Error::Overflow { what: "pairs", value: pairs as f64 });
    }
    Ok((pairs, f, m))
}

struct Recorder {
    mode: RecordingMode,
    stride: u64,
    steps: Vec<Step>,
    pending: Option<Step>,
}

impl Recorder {
    fn new(mode: RecordingMode, n0: u64) -> Self {
        let stride = (n0 as f64).ln().ceil().max(1.0) as u64;
        Recorder { mode, stride, steps: Vec::new(), pending: None }
    }

    fn push(&mut self, step: Step) {
        match self.mode {
            RecordingMode::Full => self.steps.push(step),
            RecordingMode::Sparse => {
                if step.n % self.stride == 0 {
                    self.steps.push(step);
                    self.pending = None;
                } else {
                    self.pending = Some(step);
                }
            }
            RecordingMode::Terminal => {}
        }
    }

    fn finish(mut self) -> Vec<Step> {
        if let Some(last) = self.pending.take() {
            self.steps.push(last);
        }
        self.steps
    }
}

/// Runs the process of one [`Model`].
#[derive(Clone, Copy, Debug)]
pub struct Simulator<'a> {
    model: &'a Model,
    policy: LargePopulation,
}

impl<'a> Simulator<'a> {
    pub fn new(model: &'a Model) -> Self {
        Simulator { model, policy: LargePopulation::Continuum }
    }

    pub fn with_policy(mut self, policy: LargePopulation) -> Self {
        self.policy = policy;
        self
    }

    pub fn model(&self) -> &Model {
        self.model
    }

    fn rule(&self) -> &MatingRule {
        &self.model.rule
    }

    /// One generation from any population size: `(N_next, F, M)`.
    pub fn advance<R: Rng + ?Sized>(&self, prev: Size, eta: f64, rng: &mut R) -> Result<(Size, Size, Size)> {
        let offspring = &self.model.offspring;
        let ln_prev = match prev {
            Size::Exact(0) => return Ok((Size::ZERO, Size::ZERO, Size::ZERO)),
            Size::Exact(n) => {
                let (lf, lm) = offspring.ln_conditional_means(eta);
                let ln_mean = (n as f64).ln() + lf.max(lm);
                if self.policy == LargePopulation::Abort || ln_mean <= CONTINUUM_ENTRY.ln() {
                    let (p, f, m) = evolve_step(self.rule(), offspring, n, eta, rng)?;
                    return Ok((Size::Exact(p), Size::Exact(f), Size::Exact(m)));
                }
                (n as f64).ln()
            }
            Size::Large(ln) => {
                if self.policy == LargePopulation::Abort {
                    return Err(Error::Overflow { what: "population", value: ln.exp() });
                }
                ln
            }
        };
        let (lf, lm) = offspring.continuum_totals(ln_prev, eta, rng);
        let pivot = lf.max(lm);
        let ln_pairs = if pivot == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            let g = self.rule().approximant((lf - pivot).exp(), (lm - pivot).exp(), eta);
            if g > 0.0 {
                pivot + g.ln()
            } else {
                f64::NEG_INFINITY
            }
        };
        Ok((Size::from_ln(ln_pairs), Size::from_ln(lf), Size::from_ln(lm)))
    }

    /// Evolves from `n0` couples until extinction or `max_steps`.
    pub fn run_until_extinction<R: Rng + ?Sized>(
        &self,
        n0: u64,
        max_steps: u64,
        rng: &mut R,
        recording: RecordingMode,
    ) -> Result<Trajectory> {
        validate_run(n0, max_steps)?;
        let env = &self.model.environment;
        let mut state = RunState::new(n0, recording);
        for _ in 0..max_steps {
            let eta = env.sample(rng);
            state.evolve(self, eta, rng)?;
            if !state.alive() {
                break;
            }
        }
        Ok(state.into_trajectory())
    }

    /// Evolves from `n0` couples along a fixed environment path.
    pub fn run_in_environment<R: Rng + ?Sized>(
        &self,
        n0: u64,
        etas: &[f64],
        rng: &mut R,
        recording: RecordingMode,
    ) -> Result<Trajectory> {
        validate_run(n0, etas.len() as u64)?;
        let mut state = RunState::new(n0, recording);
        for &eta in etas {
            state.evolve(self, eta, rng)?;
            if !state.alive() {
                break;
            }
        }
        Ok(state.into_trajectory())
    }

    /// Process and walk driven by one environment sequence, recording `θ`,
    /// `N_θ`, `N_{θ+k}` and `τ`.
    ///
    /// The walk keeps running after extinction until `θ` is found; the
    /// process keeps running after `θ + k` until `τ`. Both stop at
    /// `max_steps`.
    pub fn run_coupled<R: Rng + ?Sized>(
        &self,
        n0: u64,
        beta: f64,
        epsilon: f64,
        max_steps: u64,
        rng: &mut R,
        recording: RecordingMode,
    ) -> Result<CoupledRun> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::config(format!("epsilon must lie in (0, inf), got {epsilon}")));
        }
        let spec = HittingSpec::new(n0, beta, max_steps)?;
        let k = (epsilon * ln_squared(n0)).floor() as u64;
        let env = &self.model.environment;

        let mut state = RunState::new(n0, recording);
        let mut theta = None;
        let mut n_at_theta = None;
        let mut n_at_theta_plus_k = None;
        let mut steps_run = 0;
        for n in 1..=max_steps {
            steps_run = n;
            let eta = env.sample(rng);
            if state.alive() {
                state.evolve(self, eta, rng)?;
            } else {
                state.walk_only(self, eta)?;
            }
            let size = state.known_size();
            if theta.is_none() && spec.is_below(state.position) {
                theta = Some(n);
                n_at_theta = size;
            }
            if let Some(th) = theta {
                if n == th + k {
                    n_at_theta_plus_k = size;
                }
                if !state.alive() {
                    break;
                }
            }
            if state.outcome == Some(Outcome::Overflow) {
                break;
            }
        }
        if theta.is_some() && n_at_theta_plus_k.is_none() && state.outcome == Some(Outcome::Extinct) {
            n_at_theta_plus_k = Some(Size::ZERO);
        }
        Ok(CoupledRun {
            trajectory: state.into_trajectory(),
            theta,
            epsilon,
            k,
            n_at_theta,
            n_at_theta_plus_k,
            steps_run,
        })
    }
}

fn validate_run(n0: u64, max_steps: u64) -> Result<()> {
    if n0 == 0 || n0 > COUNT_GUARD {
        return Err(Error::config(format!("N0 must lie in [1, 2^62], got {n0}")));
    }
    if max_steps == 0 {
        return Err(Error::config("max_steps must be at least 1"));
    }
    Ok(())
}

/// `ξ` with vanishing means read as `ln 0 = −∞`.
fn run_xi(model: &Model, eta: f64) -> Result<f64> {
    match model.xi(eta) {
        Err(Error::DegenerateModel(_)) => Ok(f64::NEG_INFINITY),
        other => other,
    }
}

struct RunState {
    n0: u64,
    size: Size,
    position: f64,
    generations: u64,
    outcome: Option<Outcome>,
    recorder: Recorder,
}

impl RunState {
    fn new(n0: u64, recording: RecordingMode) -> Self {
        RunState {
            n0,
            size: Size::Exact(n0),
            position: 0.0,
            generations: 0,
            outcome: None,
            recorder: Recorder::new(recording, n0),
        }
    }

    fn alive(&self) -> bool {
        self.outcome.is_none()
    }

    /// Current size, unless the run was cut by overflow.
    fn known_size(&self) -> Option<Size> {
        (self.outcome != Some(Outcome::Overflow)).then_some(self.size)
    }

    fn evolve<R: Rng + ?Sized>(&mut self, sim: &Simulator<'_>, eta: f64, rng: &mut R) -> Result<()> {
        let xi = run_xi(sim.model, eta)?;
        self.position += xi;
        self.generations += 1;
        let prev = self.size;
        match sim.advance(prev, eta, rng) {
            Ok((pairs, females, males)) => {
                self.size = pairs;
                let residual = pairs.value() - prev.value() * xi.exp();
                self.recorder.push(Step {
                    n: self.generations,
                    eta,
                    females,
                    males,
                    pairs,
                    xi,
                    position: self.position,
                    residual,
                });
                if pairs.is_zero() {
                    self.outcome = Some(Outcome::Extinct);
                }
            }
            Err(Error::Overflow { .. }) => self.outcome = Some(Outcome::Overflow),
            Err(e) => return Err(e),
        }
        Ok(())
    }

    fn walk_only(&mut self, sim: &Simulator<'_>, eta: f64) -> Result<()> {
        self.position += run_xi(sim.model, eta)?;
        Ok(())
    }

    fn into_trajectory(self) -> Trajectory {
        let outcome = self.outcome.unwrap_or(Outcome::Censored);
        Trajectory {
            n0: self.n0,
            recording: self.recorder.mode,
            steps: self.recorder.finish(),
            tau: (outcome == Outcome::Extinct).then_some(self.generations),
            outcome,
            generations: self.generations,
            final_size: self.size,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{EnvironmentModel, MeanMap};
    use crate::rng::seeded;

    fn canonical() -> Model {
        Model::canonical(0.5).unwrap()
    }

    #[test]
    fn zero_pairs_are_absorbing() {
        let model = canonical();
        let mut rng = seeded(41);
        assert_eq!(evolve_step(&model.rule, &model.offspring, 0, 0.3, &mut rng).unwrap(), (0, 0, 0));
    }

    #[test]
    fn asexual_next_generation_is_female_total() {
        let mut model = canonical();
        model.rule = MatingRule::asexual();
        let mut rng = seeded(42);
        for n in [1u64, 10, 1000] {
            let (p, f, _) = evolve_step(&model.rule, &model.offspring, n, 0.1, &mut rng).unwrap();
            assert_eq!(p, f);
        }
    }

    #[test]
    fn monogamous_pairs_bounded_by_both_totals() {
        let model = canonical();
        let mut rng = seeded(43);
        for _ in 0..1000 {
            let (p, f, m) = evolve_step(&model.rule, &model.offspring, 50, 0.0, &mut rng).unwrap();
            assert!(p <= f && p <= m);
        }
    }

    #[test]
    fn no_offspring_dies_at_once() {
        let mut model = canonical();
        model.offspring = OffspringModel::fixed(0, 0);
        let mut rng = seeded(44);
        let t = Simulator::new(&model).run_until_extinction(100, 10, &mut rng, RecordingMode::Full).unwrap();
        assert_eq!(t.tau, Some(1));
        assert_eq!(t.outcome, Outcome::Extinct);
    }

    #[test]
    fn full_recording_invariants() {
        let model = canonical();
        let mut rng = seeded(45);
        let sim = Simulator::new(&model);
        for _ in 0..50 {
            let t = sim.run_until_extinction(200, 2000, &mut rng, RecordingMode::Full).unwrap();
            let mut prev = 200.0;
            let mut s = 0.0;
            for (i, step) in t.steps.iter().enumerate() {
                assert_eq!(step.n, i as u64 + 1);
                s += step.xi;
                assert_eq!(s, step.position);
                assert_eq!(step.residual, step.pairs.value() - prev * step.xi.exp());
                prev = step.pairs.value();
                if let (Some(f), Some(m), Some(p)) = (step.females.exact(), step.males.exact(), step.pairs.exact()) {
                    assert_eq!(p, model.rule.mate(f, m, step.eta));
                }
            }
            if let Some(tau) = t.tau {
                assert_eq!(t.steps.len() as u64, tau);
                assert!(t.steps.last().unwrap().pairs.is_zero());
                assert!(t.steps[..t.steps.len() - 1].iter().all(|s| !s.pairs.is_zero()));
            }
        }
    }

    #[test]
    fn sparse_recording_keeps_stride_and_last() {
        let model = canonical();
        let mut rng = seeded(46);
        let t = Simulator::new(&model).run_until_extinction(1000, 500, &mut rng, RecordingMode::Sparse).unwrap();
        let stride = 7; // ⌈ln 1000⌉
        let (last, rest) = t.steps.split_last().unwrap();
        assert!(rest.iter().all(|s| s.n % stride == 0));
        assert_eq!(last.n, t.generations);
        let terminal = Simulator::new(&model).run_until_extinction(1000, 500, &mut rng, RecordingMode::Terminal).unwrap();
        assert!(terminal.steps.is_empty());
    }

    #[test]
    fn identical_streams_identical_runs() {
        let model = canonical();
        let sim = Simulator::new(&model);
        let a = sim.run_coupled(10_000, 3.0, 1.0, 50_000, &mut seeded(47), RecordingMode::Full).unwrap();
        let b = sim.run_coupled(10_000, 3.0, 1.0, 50_000, &mut seeded(47), RecordingMode::Full).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn degenerate_environment_censors_theta() {
        let model = Model::canonical(0.0).unwrap();
        let run = Simulator::new(&model).run_coupled(1000, 3.0, 1.0, 200, &mut seeded(48), RecordingMode::Terminal).unwrap();
        assert_eq!(run.theta, None);
        assert_eq!(run.n_at_theta, None);
        assert_eq!(run.n_at_theta_plus_k, None);
    }

    #[test]
    fn coupled_fields_are_consistent() {
        let model = canonical();
        let sim = Simulator::new(&model);
        let mut rng = seeded(49);
        for _ in 0..40 {
            let n0 = 10_000;
            let run = sim.run_coupled(n0, 3.0, 0.5, 200_000, &mut rng, RecordingMode::Full).unwrap();
            assert_eq!(run.k, (0.5 * ln_squared(n0)).floor() as u64);
            let Some(theta) = run.theta else { continue };
            let spec = HittingSpec::new(n0, 3.0, 1).unwrap();
            let steps = &run.trajectory.steps;
            if let Some(step) = steps.get(theta as usize - 1) {
                assert!(spec.is_below(step.position));
                assert_eq!(run.n_at_theta, Some(step.pairs));
                assert!(steps[..theta as usize - 1].iter().all(|s| !spec.is_below(s.position)));
            } else {
                assert_eq!(run.n_at_theta, Some(Size::ZERO));
            }
            match steps.get((theta + run.k) as usize - 1) {
                Some(step) => assert_eq!(run.n_at_theta_plus_k, Some(step.pairs)),
                None if run.trajectory.outcome == Outcome::Extinct => {
                    assert_eq!(run.n_at_theta_plus_k, Some(Size::ZERO))
                }
                None => assert_eq!(run.n_at_theta_plus_k, None),
            }
        }
    }

    #[test]
    fn huge_populations_enter_and_leave_the_continuum() {
        let model = Model {
            environment: EnvironmentModel::normal(0.0, 0.0).unwrap(),
            offspring: OffspringModel::poisson(MeanMap::exp_shifted(2.0), MeanMap::exp_shifted(2.0)),
            rule: MatingRule::monogamous(1),
        };
        let sim = Simulator::new(&model);
        let mut rng = seeded(50);
        let mut size = Size::Exact(1 << 40);
        for _ in 0..20 {
            size = sim.advance(size, 0.0, &mut rng).unwrap().0;
        }
        let Size::Large(ln) = size else { panic!("expected continuum, got {size:?}") };
        assert!((ln - (40.0 * 2f64.ln() + 40.0)).abs() < 1e-6);

        let down = Model {
            offspring: OffspringModel::poisson(MeanMap::exp_shifted(-2.0), MeanMap::exp_shifted(-2.0)),
            ..model.clone()
        };
        let sim = Simulator::new(&down);
        for _ in 0..40 {
            size = sim.advance(size, 0.0, &mut rng).unwrap().0;
        }
        assert!(size.exact().is_some());

        let strict = Simulator::new(&model).with_policy(LargePopulation::Abort);
        let mut s = Size::Exact(1 << 40);
        let err = loop {
            match strict.advance(s, 0.0, &mut rng) {
                Ok((next, _, _)) => s = next,
                Err(e) => break e,
            }
        };
        assert!(matches!(err, Error::Overflow { .. }));
    }

    #[test]
    fn abort_policy_tags_the_replicate() {
        let model = Model {
            environment: EnvironmentModel::normal(0.0, 0.0).unwrap(),
            offspring: OffspringModel::poisson(MeanMap::exp_shifted(1.0), MeanMap::exp_shifted(1.0)),
            rule: MatingRule::monogamous(1),
        };
        let t = Simulator::new(&model)
            .with_policy(LargePopulation::Abort)
            .run_until_extinction(1000, 1000, &mut seeded(51), RecordingMode::Terminal)
            .unwrap();
        assert_eq!(t.outcome, Outcome::Overflow);
        assert_eq!(t.tau, None);
    }

    #[test]
    fn size_display() {
        assert_eq!(Size::Exact(17).to_string(), "17");
        assert!(Size::Large(50.0).to_string().contains('e'));
    }
}
