use log::debug;
use nalgebra::DMatrix;

use super::{finish, tie_tolerance, Budget, Guard, RunOutcome, SolverConfig, StopReason, Trace};
use crate::dataset::{dot, Dataset, SupportSet};
use crate::error::{Error, Result};
use crate::linalg::{self, ActiveSet};

/// Largest p for which SFS2 caches the Gram matrix.
const GRAM_CACHE_MAX_P: usize = 1000;

/// Calls `f` on every `t`-combination of `0..n` in lexicographic order.
pub(crate) fn for_each_combination(n: usize, t: usize, mut f: impl FnMut(&[usize])) {
    if t > n {
        return;
    }
    let mut idx: Vec<usize> = (0..t).collect();
    loop {
        f(&idx);
        let mut i = t;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] < n - t + i {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for l in i + 1..t {
            idx[l] = idx[l - 1] + 1;
        }
    }
}

/// Indices of the `k` largest `|v_j|`, lowest index first among ties, sorted.
pub(crate) fn top_k_abs(v: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[b].abs().total_cmp(&v[a].abs()).then(a.cmp(&b)));
    let mut out = order[..k.min(v.len())].to_vec();
    out.sort_unstable();
    out
}

fn rss_of(data: &Dataset, members: &[usize]) -> f64 {
    ActiveSet::with_members(data, members, false).rss()
}

struct Swapper<'a> {
    data: &'a Dataset,
    t: usize,
    naive: bool,
    gram: Option<DMatrix<f64>>,
}

impl<'a> Swapper<'a> {
    fn gram_entry(&self, a: usize, b: usize) -> f64 {
        match &self.gram {
            Some(g) => g[(a, b)],
            None => dot(self.data.column(a), self.data.column(b)),
        }
    }

    /// Positions (into sorted `current`) of the drop set minimizing the gain.
    fn drop_set(&self, current: &[usize], rss: f64) -> Vec<usize> {
        let set = ActiveSet::with_members(self.data, current, false);
        if !self.naive {
            if self.t == 1 {
                if let Some(g) = set.drop_gains() {
                    let mut best = 0;
                    for i in 1..g.len() {
                        if g[i] < g[best] {
                            best = i;
                        }
                    }
                    return vec![best];
                }
            } else if self.t == 2 {
                if let Some(pairs) = set.pair_drop_gains() {
                    let mut best: Option<((usize, usize), f64)> = None;
                    for (pair, g) in pairs {
                        if best.is_none_or(|(_, b)| g < b) {
                            best = Some((pair, g));
                        }
                    }
                    let ((a, b), _) = best.expect("k >= 2 when t = 2");
                    return vec![a, b];
                }
            }
        }
        let mut best: Option<(Vec<usize>, f64)> = None;
        let mut rest = Vec::with_capacity(current.len());
        for_each_combination(current.len(), self.t, |combo| {
            rest.clear();
            rest.extend(current.iter().enumerate().filter(|(i, _)| !combo.contains(i)).map(|(_, &j)| j));
            let g = rss_of(self.data, &rest) - rss;
            if best.as_ref().is_none_or(|(_, b)| g < *b) {
                best = Some((combo.to_vec(), g));
            }
        });
        best.map(|(c, _)| c).unwrap_or_default()
    }

    /// Pick set among `candidates` maximizing the reduction with respect to `reduced`.
    fn pick_set(&self, reduced: &[usize], candidates: &[usize]) -> Vec<usize> {
        if !self.naive && self.t <= 2 {
            let hat = ActiveSet::with_members(self.data, reduced, true);
            let mut best: Option<(Vec<usize>, f64)> = None;
            if self.t == 1 {
                for &j in candidates {
                    let r = hat.add_reduction(j);
                    if best.as_ref().is_none_or(|(_, b)| r > *b) {
                        best = Some((vec![j], r));
                    }
                }
            } else {
                for (ia, &a) in candidates.iter().enumerate() {
                    for &b in &candidates[ia + 1..] {
                        let r = hat.pair_reduction(a, b, self.gram_entry(a, b));
                        if best.as_ref().is_none_or(|(_, v)| r > *v) {
                            best = Some((vec![a, b], r));
                        }
                    }
                }
            }
            return best.map(|(q, _)| q).unwrap_or_default();
        }
        let base = rss_of(self.data, reduced);
        let mut best: Option<(Vec<usize>, f64)> = None;
        let mut grown = Vec::with_capacity(reduced.len() + self.t);
        for_each_combination(candidates.len(), self.t, |combo| {
            grown.clear();
            grown.extend_from_slice(reduced);
            grown.extend(combo.iter().map(|&c| candidates[c]));
            let r = base - rss_of(self.data, &grown);
            if best.as_ref().is_none_or(|(_, b)| r > *b) {
                best = Some((combo.iter().map(|&c| candidates[c]).collect(), r));
            }
        });
        best.map(|(q, _)| q).unwrap_or_default()
    }
}

/// Sequential feature swapping with swap width `t`.
///
/// Starts from the `k` largest-magnitude least-squares coefficients. Each
/// iteration drops the `t` members with the smallest joint gain, adds the `t`
/// outside columns with the largest joint reduction, and keeps the swap only
/// if the RSS strictly decreases.
pub fn sfs(data: &Dataset, k: usize, t: usize, budget: &Budget, config: &SolverConfig) -> Result<RunOutcome> {
    let p = data.p();
    if k == 0 || k > p {
        return Err(Error::InvalidK { k, p });
    }
    if t == 0 || t > k {
        return Err(Error::InvalidArgument(format!("swap width t = {t} must satisfy 1 <= t <= k = {k}")));
    }
    let guard = Guard::start(*budget);
    let tol = tie_tolerance(data);
    let mut trace = Trace::new(config.trace);
    let swapper = Swapper {
        data,
        t,
        naive: config.naive,
        gram: (t == 2 && !config.naive && p <= GRAM_CACHE_MAX_P).then(|| linalg::gram(data)),
    };

    let mut current = top_k_abs(&linalg::full_least_squares(data), k);
    let mut rss = rss_of(data, &current);
    trace.push(rss);
    let mut iterations = 0u64;
    let mut switches = 0u64;
    let stop = loop {
        if let Some(reason) = guard.check(iterations) {
            break reason;
        }
        iterations += 1;
        let candidates: Vec<usize> = (0..p).filter(|j| current.binary_search(j).is_err()).collect();
        if candidates.len() < t {
            break StopReason::Converged;
        }
        let drop = swapper.drop_set(&current, rss);
        let reduced: Vec<usize> =
            current.iter().enumerate().filter(|(i, _)| !drop.contains(i)).map(|(_, &j)| j).collect();
        let pick = swapper.pick_set(&reduced, &candidates);
        let mut next = reduced;
        next.extend_from_slice(&pick);
        next.sort_unstable();
        let next_rss = rss_of(data, &next);
        if next_rss < rss - tol {
            debug!("SFS{t} switch {switches}: rss {rss} -> {next_rss}");
            current = next;
            rss = next_rss;
            switches += 1;
            trace.push(rss);
        } else {
            break StopReason::Converged;
        }
    };
    let notes = vec![format!("switches: {switches}")];
    finish(data, SupportSet::new(current), &guard, iterations, stop, trace, notes)
}
