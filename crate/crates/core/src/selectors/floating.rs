use log::debug;

use super::{
    add_scores, argmax_excluding, drop_scores, finish, forward_selection, tie_tolerance, Budget, Guard, RunOutcome,
    SolverConfig, StopReason, Trace,
};
use crate::dataset::{Dataset, SupportSet};
use crate::error::{Error, Result};
use crate::linalg::ActiveSet;

/// Outcome of one pass of the floating search loop.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FloatingStep {
    /// Inclusion of `t`, kept because it was the weakest member.
    Included(usize),
    /// Inclusion of `added` followed by conditional exclusion of `dropped[0]`
    /// and, possibly, further exclusions from the continuation step.
    Excluded { added: usize, dropped: Vec<usize> },
}

/// Sequential forward floating search with a best-model-per-size table.
///
/// Exposes the search one loop pass at a time so the table can be inspected.
#[derive(Debug, Clone)]
pub struct FloatingSearch<'a> {
    data: &'a Dataset,
    k: usize,
    naive: bool,
    tol: f64,
    set: ActiveSet<'a>,
    best: Vec<Option<(f64, SupportSet)>>,
    exclusions: u64,
}

impl<'a> FloatingSearch<'a> {
    /// Starts from the two-column forward selection model. Requires `2 <= k <= p`.
    pub fn new(data: &'a Dataset, k: usize, config: &SolverConfig) -> Result<Self> {
        if k < 2 || k > data.p() {
            return Err(Error::InvalidK { k, p: data.p() });
        }
        let mut search = Self {
            data,
            k,
            naive: config.naive,
            tol: tie_tolerance(data),
            set: ActiveSet::new(data, !config.naive),
            best: vec![None; k + 1],
            exclusions: 0,
        };
        search.best[0] = Some((data.y_norm_sq(), SupportSet::empty()));
        for _ in 0..2 {
            search.include();
        }
        Ok(search)
    }

    pub fn is_done(&self) -> bool {
        self.set.len() >= self.k
    }

    /// Current members in insertion order.
    pub fn current(&self) -> &[usize] {
        self.set.members()
    }

    pub fn current_rss(&self) -> f64 {
        self.set.rss()
    }

    /// Best `(rss, support)` recorded at each cardinality `0..=k`.
    pub fn records(&self) -> &[Option<(f64, SupportSet)>] {
        &self.best
    }

    /// Number of loop passes in which a conditional exclusion fired.
    pub fn exclusions(&self) -> u64 {
        self.exclusions
    }

    /// Best model at the largest cardinality recorded so far.
    pub fn largest_record(&self) -> &SupportSet {
        self.best.iter().rev().flatten().next().map(|(_, s)| s).expect("size-0 record always exists")
    }

    fn record(&mut self) {
        let size = self.set.len();
        let rss = self.set.rss();
        let better = match &self.best[size] {
            Some((b, _)) => rss < *b,
            None => true,
        };
        if better {
            self.best[size] = Some((rss, SupportSet::new(self.set.members().to_vec())));
        }
    }

    fn include(&mut self) -> usize {
        let scores = add_scores(self.data, &self.set, self.naive);
        let t = argmax_excluding(&scores, self.tol, |j| self.set.contains(j)).expect("k <= p leaves a candidate");
        self.set.push(t);
        self.record();
        t
    }

    /// Position of the member with the smallest drop gain, lowest predictor index on ties.
    fn weakest(&self) -> (usize, Vec<f64>) {
        let gains = drop_scores(self.data, &self.set, self.naive);
        let members = self.set.members();
        let mut best = 0;
        for pos in 1..members.len() {
            let (g, b) = (gains[pos], gains[best]);
            if g < b || (g == b && members[pos] < members[best]) {
                best = pos;
            }
        }
        (best, gains)
    }

    fn remove(&mut self, pos: usize) -> usize {
        let members = self.set.members();
        let j = members[pos];
        let rest: Vec<usize> = members.iter().copied().filter(|&m| m != j).collect();
        self.set = ActiveSet::with_members(self.data, &rest, !self.naive);
        self.record();
        j
    }

    /// Runs one inclusion with its conditional exclusion and continuation.
    /// Returns `None` once the current model has `k` members.
    pub fn step(&mut self) -> Option<FloatingStep> {
        if self.is_done() {
            return None;
        }
        let t = self.include();
        let size = self.set.len();
        let (r_pos, gains) = self.weakest();
        let t_pos = size - 1;
        if r_pos == t_pos {
            return Some(FloatingStep::Included(t));
        }
        let g_r = gains[r_pos];
        let candidate = self.set.rss() + g_r;
        let best_below = self.best[size - 1].as_ref().map(|(b, _)| *b).unwrap_or(f64::INFINITY);
        // only a strictly better size-(size-1) model counts as an exclusion
        if !(g_r < gains[t_pos] - self.tol) || !(candidate < best_below - self.tol) {
            return Some(FloatingStep::Included(t));
        }
        self.exclusions += 1;
        let mut dropped = vec![self.remove(r_pos)];
        while self.set.len() > 2 {
            let (s_pos, gains) = self.weakest();
            let candidate = self.set.rss() + gains[s_pos];
            let target = self.best[self.set.len() - 1].as_ref().map(|(b, _)| *b).unwrap_or(f64::INFINITY);
            if candidate >= target - self.tol {
                break;
            }
            dropped.push(self.remove(s_pos));
        }
        debug!("SFFS: added {} dropped {:?} size={}", t + 1, dropped, self.set.len());
        Some(FloatingStep::Excluded { added: t, dropped })
    }
}

/// Sequential forward floating selection. For `k < 2` this is forward selection.
///
/// Returns the best size-`k` model recorded. When the budget runs out first,
/// returns the best model at the largest cardinality reached, which may have
/// fewer than `k` columns.
pub fn sffs(data: &Dataset, k: usize, budget: &Budget, config: &SolverConfig) -> Result<RunOutcome> {
    if k > data.p() || k == 0 {
        return Err(Error::InvalidK { k, p: data.p() });
    }
    if k < 2 {
        let mut out = forward_selection(data, k, budget, config)?;
        out.diagnostics.notes.push("k < 2: forward selection used".into());
        return Ok(out);
    }
    let guard = Guard::start(*budget);
    let mut trace = Trace::new(config.trace);
    let mut search = FloatingSearch::new(data, k, config)?;
    let mut iterations = 0u64;
    let stop = loop {
        if search.is_done() {
            break StopReason::Converged;
        }
        if let Some(reason) = guard.check(iterations) {
            break reason;
        }
        search.step();
        iterations += 1;
        trace.push(search.current_rss());
    };
    let support = match (&search.records()[k], stop) {
        (Some((_, s)), StopReason::Converged) => s.clone(),
        _ => search.largest_record().clone(),
    };
    let notes = vec![format!("conditional exclusions: {}", search.exclusions())];
    finish(data, support, &guard, iterations, stop, trace, notes)
}
