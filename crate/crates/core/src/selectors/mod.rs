//! Subset selection algorithms.
//!
//! Every solver takes a [`Dataset`], a target cardinality `k`, a
//! [`SolverConfig`] and a [`Budget`], and returns a [`RunOutcome`]: the exact
//! least-squares refit on the selected support plus run diagnostics.
//!
//! | id         | algorithm                                     |
//! |------------|-----------------------------------------------|
//! | FS         | forward selection                             |
//! | SFFS       | sequential forward floating selection         |
//! | SFS1/SFS2  | sequential feature swapping, swap width t     |
//! | DFO / DFOn | discrete first-order method, n random starts  |
//! | GA         | genetic algorithm on fixed-cardinality masks  |
//! | EXHAUSTIVE | enumeration of all k-subsets                  |
//!
//! Argmax/argmin scans break ties by the lowest index (or the
//! lexicographically smallest subset).

mod dfo;
mod exhaustive;
mod floating;
mod forward;
mod genetic;
mod swap;

pub use dfo::{dfo, dfo_from, dfon, hard_threshold, random_start};
pub use exhaustive::{binomial, exhaustive, EXHAUSTIVE_LIMIT};
pub use floating::{sffs, FloatingSearch, FloatingStep};
pub use forward::forward_selection;
pub use genetic::{genetic, genetic_from, Chromosome, GeneticSearch};
pub use swap::sfs;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cpu::Stopwatch;
use crate::dataset::{Dataset, SubsetSolution, SupportSet};
use crate::error::{Error, Result};
use crate::linalg::{self, ActiveSet};

/// Resource limits of a single run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Budget {
    pub cpu_seconds_limit: f64,
    pub max_iterations: u64,
    /// Relative DFO tolerance; the run stops once the objective decrease
    /// falls below `epsilon * (1 + g(beta_0))`.
    pub epsilon: f64,
}

impl Default for Budget {
    fn default() -> Self {
        Self { cpu_seconds_limit: 600.0, max_iterations: 1_000_000, epsilon: 1e-6 }
    }
}

impl Budget {
    pub fn validate(&self) -> Result<()> {
        if !(self.cpu_seconds_limit > 0.0) || self.max_iterations == 0 || !(self.epsilon > 0.0) {
            return Err(Error::InvalidConfig(format!("budget values must be positive: {self:?}")));
        }
        Ok(())
    }

    pub fn with_time_limit(mut self, seconds: f64) -> Self {
        self.cpu_seconds_limit = seconds;
        self
    }

    pub fn with_max_iterations(mut self, iterations: u64) -> Self {
        self.max_iterations = iterations;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Fs,
    Sffs,
    Sfs,
    Dfo,
    Dfon,
    Ga,
    Exhaustive,
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "fs" => SolverKind::Fs,
            "sffs" => SolverKind::Sffs,
            "sfs" | "sfs1" | "sfs2" => SolverKind::Sfs,
            "dfo" => SolverKind::Dfo,
            "dfon" => SolverKind::Dfon,
            "ga" => SolverKind::Ga,
            "exhaustive" | "oracle" => SolverKind::Exhaustive,
            other => return Err(Error::InvalidArgument(format!("unknown solver `{other}`"))),
        })
    }
}

/// Step constant `L` of the DFO update `H_k(beta - grad / L)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepConstant {
    /// `2 λ_max(X^T X)`, the Lipschitz constant of the gradient of `||y - Xβ||²`.
    Auto,
    /// `λ_max(X^T X)` as a literal reading of the method's description.
    SpectralNorm,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub kind: SolverKind,
    /// Swap width for SFS.
    pub t: usize,
    /// Number of DFO starts for DFOn.
    pub restarts: usize,
    pub population_size: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub step: StepConstant,
    pub rng_seed: u64,
    /// Recompute every gain/reduction with a full solve instead of incremental updates.
    pub naive: bool,
    /// Allow exhaustive enumeration beyond [`EXHAUSTIVE_LIMIT`] subsets.
    pub force: bool,
    /// Keep the objective trace in the diagnostics.
    pub trace: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self::new(SolverKind::Fs)
    }
}

impl SolverConfig {
    pub fn new(kind: SolverKind) -> Self {
        Self {
            kind,
            t: 1,
            restarts: 20,
            population_size: 10,
            crossover_rate: 0.8,
            mutation_rate: 0.2,
            step: StepConstant::Auto,
            rng_seed: 0,
            naive: false,
            force: false,
            trace: false,
        }
    }

    /// Parses ids such as `fs`, `sfs2`, `dfon`, `exhaustive`.
    pub fn from_name(name: &str) -> Result<Self> {
        let kind: SolverKind = name.parse()?;
        let mut cfg = Self::new(kind);
        if name.eq_ignore_ascii_case("sfs2") {
            cfg.t = 2;
        }
        Ok(cfg)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn with_t(mut self, t: usize) -> Self {
        self.t = t;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn with_naive(mut self, naive: bool) -> Self {
        self.naive = naive;
        self
    }

    pub fn with_trace(mut self, trace: bool) -> Self {
        self.trace = trace;
        self
    }

    pub fn with_step(mut self, step: StepConstant) -> Self {
        self.step = step;
        self
    }

    /// Identifier used in result stores, e.g. `SFS2` or `DFOn`.
    pub fn solver_id(&self) -> String {
        match self.kind {
            SolverKind::Fs => "FS".into(),
            SolverKind::Sffs => "SFFS".into(),
            SolverKind::Sfs => format!("SFS{}", self.t),
            SolverKind::Dfo => "DFO".into(),
            SolverKind::Dfon => "DFOn".into(),
            SolverKind::Ga => "GA".into(),
            SolverKind::Exhaustive => "EXHAUSTIVE".into(),
        }
    }

    pub fn validate(&self, k: usize, p: usize) -> Result<()> {
        if k == 0 || k > p {
            return Err(Error::InvalidK { k, p });
        }
        match self.kind {
            SolverKind::Sfs if self.t == 0 || self.t > k => {
                Err(Error::InvalidArgument(format!("swap width t = {} must satisfy 1 <= t <= k = {k}", self.t)))
            }
            SolverKind::Dfon if self.restarts == 0 => Err(Error::InvalidConfig("restarts must be >= 1".into())),
            SolverKind::Ga if self.population_size < 2 => {
                Err(Error::InvalidConfig(format!("population size {} < 2", self.population_size)))
            }
            SolverKind::Ga
                if !(0.0..=1.0).contains(&self.crossover_rate) || !(0.0..=1.0).contains(&self.mutation_rate) =>
            {
                Err(Error::InvalidConfig("crossover and mutation rates must lie in [0, 1]".into()))
            }
            SolverKind::Dfo | SolverKind::Dfon => match self.step {
                StepConstant::Fixed(l) if !(l > 0.0) => Err(Error::InvalidConfig(format!("step constant {l} <= 0"))),
                _ => Ok(()),
            },
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StopReason {
    Converged,
    TimeLimit,
    IterLimit,
    PopulationHomogeneous,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::Converged => "CONVERGED",
            StopReason::TimeLimit => "TIME_LIMIT",
            StopReason::IterLimit => "ITER_LIMIT",
            StopReason::PopulationHomogeneous => "POPULATION_HOMOGENEOUS",
        }
    }

    pub fn is_hard_stop(&self) -> bool {
        matches!(self, StopReason::TimeLimit | StopReason::IterLimit)
    }
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StopReason {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "CONVERGED" => StopReason::Converged,
            "TIME_LIMIT" => StopReason::TimeLimit,
            "ITER_LIMIT" => StopReason::IterLimit,
            "POPULATION_HOMOGENEOUS" => StopReason::PopulationHomogeneous,
            other => return Err(Error::InvalidArgument(format!("unknown stop reason `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunDiagnostics {
    pub iterations: u64,
    pub cpu_seconds: f64,
    pub stop_reason: StopReason,
    /// Objective value after each iteration, when requested.
    pub rss_trace: Option<Vec<f64>>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub solution: SubsetSolution,
    pub diagnostics: RunDiagnostics,
}

/// Checks the budget at iteration boundaries. Time is checked before iterations.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Guard {
    budget: Budget,
    clock: Stopwatch,
}

impl Guard {
    pub(crate) fn start(budget: Budget) -> Self {
        Self { budget, clock: Stopwatch::start() }
    }

    pub(crate) fn check(&self, iterations: u64) -> Option<StopReason> {
        if self.clock.cpu_seconds() >= self.budget.cpu_seconds_limit {
            Some(StopReason::TimeLimit)
        } else if iterations >= self.budget.max_iterations {
            Some(StopReason::IterLimit)
        } else {
            None
        }
    }

    pub(crate) fn elapsed(&self) -> f64 {
        self.clock.cpu_seconds()
    }

    pub(crate) fn budget(&self) -> &Budget {
        &self.budget
    }
}

/// Objective trace that is only materialized when requested.
#[derive(Debug, Default)]
pub(crate) struct Trace(Option<Vec<f64>>);

impl Trace {
    pub(crate) fn new(enabled: bool) -> Self {
        Self(enabled.then(Vec::new))
    }

    pub(crate) fn push(&mut self, v: f64) {
        if let Some(t) = self.0.as_mut() {
            t.push(v);
        }
    }

    pub(crate) fn into_inner(self) -> Option<Vec<f64>> {
        self.0
    }
}

pub(crate) fn finish(
    data: &Dataset,
    support: SupportSet,
    guard: &Guard,
    iterations: u64,
    stop_reason: StopReason,
    trace: Trace,
    notes: Vec<String>,
) -> Result<RunOutcome> {
    let solution = linalg::subset_rss(data, &support)?;
    Ok(RunOutcome {
        solution,
        diagnostics: RunDiagnostics {
            iterations,
            cpu_seconds: guard.elapsed(),
            stop_reason,
            rss_trace: trace.into_inner(),
            notes,
        },
    })
}

/// Near-tie margin for objective comparisons, relative to `||y||²`.
pub(crate) fn tie_tolerance(data: &Dataset) -> f64 {
    1e-12 * data.y_norm_sq().max(f64::MIN_POSITIVE)
}

/// Single-column reductions for every column outside `set` (zero for members).
///
/// Uses the tracked active set, or full solves when `naive` is set.
pub(crate) fn add_scores(data: &Dataset, set: &ActiveSet<'_>, naive: bool) -> Vec<f64> {
    let p = data.p();
    if naive {
        let base = SupportSet::new(set.members().to_vec());
        let q = linalg::subset_rss(data, &base).map(|s| s.rss).unwrap_or(f64::NAN);
        (0..p)
            .map(|j| {
                if base.contains(j) {
                    0.0
                } else {
                    q - linalg::subset_rss(data, &base.with(j)).map(|s| s.rss).unwrap_or(f64::NAN)
                }
            })
            .collect()
    } else {
        (0..p).map(|j| if set.contains(j) { 0.0 } else { set.add_reduction(j) }).collect()
    }
}

/// Gain of dropping each member of `set`, in member order.
pub(crate) fn drop_scores(data: &Dataset, set: &ActiveSet<'_>, naive: bool) -> Vec<f64> {
    if !naive {
        if let Some(g) = set.drop_gains() {
            return g;
        }
    }
    let members = set.members();
    let base = SupportSet::new(members.to_vec());
    let q = linalg::subset_rss(data, &base).map(|s| s.rss).unwrap_or(f64::NAN);
    members
        .iter()
        .map(|&j| linalg::subset_rss(data, &base.without(j)).map(|s| s.rss - q).unwrap_or(f64::NAN))
        .collect()
}

/// Index of the largest score among columns not excluded. Scores within `tol`
/// of the maximum count as ties, resolved to the lowest index.
pub(crate) fn argmax_excluding(scores: &[f64], tol: f64, excluded: impl Fn(usize) -> bool) -> Option<usize> {
    let max = scores
        .iter()
        .enumerate()
        .filter(|&(j, s)| !excluded(j) && !s.is_nan())
        .map(|(_, &s)| s)
        .fold(None, |m: Option<f64>, s| Some(m.map_or(s, |m| m.max(s))));
    match max {
        Some(m) => (0..scores.len()).find(|&j| !excluded(j) && scores[j] >= m - tol),
        None => (0..scores.len()).find(|&j| !excluded(j)),
    }
}

/// Runs the solver selected by `config.kind`.
pub fn solve(data: &Dataset, k: usize, config: &SolverConfig, budget: &Budget) -> Result<RunOutcome> {
    budget.validate()?;
    config.validate(k, data.p())?;
    match config.kind {
        SolverKind::Fs => forward_selection(data, k, budget, config),
        SolverKind::Sffs => sffs(data, k, budget, config),
        SolverKind::Sfs => sfs(data, k, config.t, budget, config),
        SolverKind::Dfo => dfo(data, k, budget, config),
        SolverKind::Dfon => dfon(data, k, budget, config),
        SolverKind::Ga => genetic(data, k, budget, config),
        SolverKind::Exhaustive => exhaustive(data, k, budget, config),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for (name, id) in [
            ("fs", "FS"),
            ("sffs", "SFFS"),
            ("sfs", "SFS1"),
            ("sfs2", "SFS2"),
            ("dfo", "DFO"),
            ("dfon", "DFOn"),
            ("ga", "GA"),
            ("exhaustive", "EXHAUSTIVE"),
        ] {
            assert_eq!(SolverConfig::from_name(name).unwrap().solver_id(), id);
        }
        assert!(SolverConfig::from_name("lasso").is_err());
    }

    #[test]
    fn config_validation() {
        let sfs = SolverConfig::from_name("sfs2").unwrap();
        assert!(matches!(sfs.validate(1, 10), Err(Error::InvalidArgument(_))));
        assert!(sfs.validate(2, 10).is_ok());
        assert!(matches!(sfs.validate(11, 10), Err(Error::InvalidK { .. })));
        let mut ga = SolverConfig::new(SolverKind::Ga);
        ga.population_size = 1;
        assert!(matches!(ga.validate(2, 10), Err(Error::InvalidConfig(_))));
        assert!(Budget::default().validate().is_ok());
        assert!(Budget::default().with_time_limit(0.0).validate().is_err());
    }

    #[test]
    fn argmax_prefers_lowest_index() {
        assert_eq!(argmax_excluding(&[1.0, 3.0, 3.0, 2.0], 0.0, |_| false), Some(1));
        assert_eq!(argmax_excluding(&[1.0, 3.0, 3.0, 2.0], 0.0, |j| j == 1), Some(2));
        assert_eq!(argmax_excluding(&[0.0, 0.0], 0.0, |_| false), Some(0));
        assert_eq!(argmax_excluding(&[1.0, 3.0, 3.0 + 1e-13], 1e-12, |_| false), Some(1));
        assert_eq!(argmax_excluding(&[1.0, 3.0, 3.1], 1e-12, |_| false), Some(2));
        assert_eq!(argmax_excluding(&[0.0], 0.0, |_| true), None);
    }
}
