use std::collections::HashSet;

use log::warn;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::swap::top_k_abs;
use super::{binomial, finish, Budget, Guard, RunOutcome, SolverConfig, StepConstant, StopReason, Trace};
use crate::cpu::Stopwatch;
use crate::dataset::{dot, Dataset, SupportSet};
use crate::error::{Error, Result};
use crate::linalg::{self, subset_rss};

/// Keeps the `k` largest-magnitude entries of `c` and zeroes the rest.
/// Ties are resolved in favour of the lowest index.
pub fn hard_threshold(c: &[f64], k: usize) -> Vec<f64> {
    let mut out = vec![0.0; c.len()];
    for j in top_k_abs(c, k) {
        out[j] = c[j];
    }
    out
}

/// A random size-`k` support with its least-squares coefficients, as a dense vector.
pub fn random_start(data: &Dataset, k: usize, rng: &mut impl Rng) -> Result<(SupportSet, Vec<f64>)> {
    let support = SupportSet::new(sample(rng, data.p(), k).into_vec());
    let fit = subset_rss(data, &support)?;
    Ok((support, fit.dense_beta(data.p())))
}

fn step_constant(data: &Dataset, step: StepConstant) -> f64 {
    match step {
        StepConstant::Auto => 2.0 * linalg::spectral_bound(data),
        StepConstant::SpectralNorm => linalg::spectral_bound(data),
        StepConstant::Fixed(l) => l,
    }
}

fn residual(data: &Dataset, beta: &[f64]) -> Vec<f64> {
    let mut r = data.y().to_vec();
    for (j, &b) in beta.iter().enumerate() {
        if b != 0.0 {
            r.iter_mut().zip(data.column(j)).for_each(|(ri, x)| *ri -= b * x);
        }
    }
    r
}

struct DfoRun {
    support: SupportSet,
    iterations: u64,
    stop: StopReason,
}

/// Iterates `beta <- H_k(beta + (2/L) X^T (y - X beta))` from `beta`.
fn iterate(
    data: &Dataset,
    k: usize,
    l: f64,
    mut beta: Vec<f64>,
    guard: &Guard,
    iter_offset: u64,
    trace: &mut Trace,
) -> DfoRun {
    let p = data.p();
    let mut r = residual(data, &beta);
    let mut g = dot(&r, &r);
    let threshold = guard.budget().epsilon * (1.0 + g);
    trace.push(g);
    let mut kept = top_k_abs(&beta, k);
    let mut iterations = 0u64;
    let stop = loop {
        if let Some(reason) = guard.check(iter_offset + iterations) {
            break reason;
        }
        iterations += 1;
        let c: Vec<f64> = (0..p).map(|j| beta[j] + 2.0 / l * dot(data.column(j), &r)).collect();
        kept = top_k_abs(&c, k);
        let mut next = vec![0.0; p];
        for &j in &kept {
            next[j] = c[j];
        }
        beta = next;
        r = residual(data, &beta);
        let g_next = dot(&r, &r);
        trace.push(g_next);
        let decrease = g - g_next;
        g = g_next;
        if decrease < threshold {
            break StopReason::Converged;
        }
    };
    DfoRun { support: SupportSet::new(kept), iterations, stop }
}

/// DFO from an explicit dense start vector (at most `k` nonzeros are used).
pub fn dfo_from(data: &Dataset, k: usize, start: &[f64], budget: &Budget, config: &SolverConfig) -> Result<RunOutcome> {
    if k == 0 || k > data.p() {
        return Err(Error::InvalidK { k, p: data.p() });
    }
    if start.len() != data.p() {
        return Err(Error::Shape(format!("start vector has {} entries, expected {}", start.len(), data.p())));
    }
    let guard = Guard::start(*budget);
    let mut trace = Trace::new(config.trace);
    let l = step_constant(data, config.step);
    let run = iterate(data, k, l, hard_threshold(start, k), &guard, 0, &mut trace);
    finish(data, run.support, &guard, run.iterations, run.stop, trace, vec![format!("L = {l}")])
}

/// DFO from a random support with least-squares coefficients drawn from `config.rng_seed`.
///
/// The reported solution is the least-squares refit on the final support.
pub fn dfo(data: &Dataset, k: usize, budget: &Budget, config: &SolverConfig) -> Result<RunOutcome> {
    if k == 0 || k > data.p() {
        return Err(Error::InvalidK { k, p: data.p() });
    }
    let guard = Guard::start(*budget);
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let (_, start) = random_start(data, k, &mut rng)?;
    let mut trace = Trace::new(config.trace);
    let l = step_constant(data, config.step);
    let run = iterate(data, k, l, start, &guard, 0, &mut trace);
    finish(data, run.support, &guard, run.iterations, run.stop, trace, vec![format!("L = {l}")])
}

/// Best of `config.restarts` DFO runs started from distinct random supports.
///
/// Run 0 uses the same start as [`dfo`] with the same seed. The CPU time is the
/// total over all runs and the budget applies to that total. When fewer
/// distinct supports exist than restarts, the remaining runs reuse random
/// supports with standard normal coefficients.
pub fn dfon(data: &Dataset, k: usize, budget: &Budget, config: &SolverConfig) -> Result<RunOutcome> {
    let p = data.p();
    if k == 0 || k > p {
        return Err(Error::InvalidK { k, p });
    }
    if config.restarts == 0 {
        return Err(Error::InvalidConfig("restarts must be >= 1".into()));
    }
    let clock = Stopwatch::start();
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let distinct = binomial(p as u64, k as u64).min(u128::from(u64::MAX)) as u64;
    let mut notes = Vec::new();
    if (config.restarts as u64) > distinct {
        let msg = format!("only {distinct} distinct supports for {} restarts; reusing supports", config.restarts);
        warn!("{msg}");
        notes.push(msg);
    }
    let l = step_constant(data, config.step);
    let mut seen: HashSet<SupportSet> = HashSet::new();
    let mut trace = Trace::new(config.trace);
    let mut best: Option<(f64, SupportSet)> = None;
    let mut iterations = 0u64;
    let mut stop = StopReason::Converged;
    for run_index in 0..config.restarts {
        let spent = clock.cpu_seconds();
        if run_index > 0 && spent >= budget.cpu_seconds_limit {
            stop = StopReason::TimeLimit;
            break;
        }
        let start = if (seen.len() as u64) < distinct {
            loop {
                let (support, beta) = random_start(data, k, &mut rng)?;
                if seen.insert(support) {
                    break beta;
                }
            }
        } else {
            let support = SupportSet::new(sample(&mut rng, p, k).into_vec());
            let mut beta = vec![0.0; p];
            for &j in support.indices() {
                beta[j] = rng.sample(StandardNormal);
            }
            beta
        };
        let run_budget = Budget { cpu_seconds_limit: (budget.cpu_seconds_limit - spent).max(0.0), ..*budget };
        let guard = Guard::start(run_budget);
        let run = iterate(data, k, l, start, &guard, 0, &mut trace);
        iterations += run.iterations;
        let rss = subset_rss(data, &run.support)?.rss;
        if best.as_ref().is_none_or(|(b, _)| rss < *b) {
            best = Some((rss, run.support));
        }
        match run.stop {
            StopReason::TimeLimit => {
                stop = StopReason::TimeLimit;
                break;
            }
            StopReason::IterLimit => stop = StopReason::IterLimit,
            _ => {}
        }
    }
    let (_, support) = best.expect("at least one run");
    notes.push(format!("L = {l}"));
    let guard = Guard::start(*budget);
    let mut out = finish(data, support, &guard, iterations, stop, trace, notes)?;
    out.diagnostics.cpu_seconds = clock.cpu_seconds();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn hard_threshold_examples() {
        assert_eq!(hard_threshold(&[3.0, -5.0, 1.0], 2), vec![3.0, -5.0, 0.0]);
        assert_eq!(hard_threshold(&[2.0, -2.0, 0.5], 1), vec![2.0, 0.0, 0.0]);
        assert_eq!(hard_threshold(&[1.0, 2.0], 2), vec![1.0, 2.0]);
        assert_eq!(hard_threshold(&[1.0, 2.0], 0), vec![0.0, 0.0]);
    }

    fn orthonormal() -> Dataset {
        let p = 4;
        let mut x = DMatrix::zeros(8, p);
        for j in 0..p {
            x[(2 * j, j)] = 1.0;
            x[(2 * j + 1, j)] = -1.0;
        }
        let y = vec![3.0, -1.0, 0.5, 2.0, -4.0, 1.0, 0.0, 0.2];
        Dataset::new("orth", x, y).unwrap().standardize().unwrap()
    }

    #[test]
    fn orthonormal_step_from_zero_is_a_fixed_point() {
        let d = orthonormal();
        let cfg = SolverConfig::new(super::super::SolverKind::Dfo).with_step(StepConstant::Fixed(2.0)).with_trace(true);
        let out = dfo_from(&d, 2, &[0.0; 4], &Budget::default(), &cfg).unwrap();
        let xty: Vec<f64> = (0..4).map(|j| dot(d.column(j), d.y())).collect();
        let expected = hard_threshold(&xty, 2);
        let dense = out.solution.dense_beta(4);
        for (a, b) in dense.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(out.diagnostics.iterations, 2);
        assert_eq!(out.diagnostics.stop_reason, StopReason::Converged);
    }

    #[test]
    fn single_restart_matches_dfo() {
        let x = DMatrix::from_fn(15, 8, |i, j| ((i * 13 + j * 5) % 17) as f64 + (j as f64).sqrt() * i as f64 * 0.1);
        let y = (0..15).map(|i| (i as f64 * 0.7).sin()).collect();
        let d = Dataset::new("t", x, y).unwrap().standardize().unwrap();
        let cfg = SolverConfig::new(super::super::SolverKind::Dfon).with_restarts(1).with_seed(9);
        let a = dfon(&d, 3, &Budget::default(), &cfg).unwrap();
        let b = dfo(&d, 3, &Budget::default(), &cfg).unwrap();
        assert_eq!(a.solution.support, b.solution.support);
        assert_eq!(a.solution.rss, b.solution.rss);
    }

    #[test]
    fn restarts_beyond_distinct_supports_warn() {
        let x = DMatrix::from_fn(6, 3, |i, j| ((i * 3 + j * 2) % 5) as f64 + j as f64 * 0.3);
        let d = Dataset::new("t", x, vec![1.0, 0.0, 2.0, 1.0, 3.0, 0.5]).unwrap().standardize().unwrap();
        let cfg = SolverConfig::new(super::super::SolverKind::Dfon).with_restarts(5);
        let out = dfon(&d, 2, &Budget::default(), &cfg).unwrap();
        assert!(out.diagnostics.notes[0].contains("distinct supports"));
        assert_eq!(out.solution.support.len(), 2);
    }
}
