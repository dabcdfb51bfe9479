use super::{finish, Budget, Guard, RunOutcome, SolverConfig, StopReason, Trace};
use crate::dataset::{Dataset, SupportSet};
use crate::error::{Error, Result};
use crate::linalg::ActiveSet;

/// Subset count above which enumeration requires `force`.
pub const EXHAUSTIVE_LIMIT: u128 = 10_000_000;

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul(u128::from(n - i)) {
            Some(v) => v / u128::from(i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

struct Enumerator<'a, 'g> {
    p: usize,
    k: usize,
    set: ActiveSet<'a>,
    guard: &'g Guard,
    leaves: u64,
    best: Option<(f64, Vec<usize>)>,
    stop: Option<StopReason>,
}

impl Enumerator<'_, '_> {
    fn descend(&mut self, from: usize) {
        if self.set.len() == self.k {
            if self.leaves % 256 == 0 {
                if let Some(reason) = self.guard.check(self.leaves) {
                    self.stop = Some(reason);
                    return;
                }
            }
            self.leaves += 1;
            let rss = self.set.rss();
            if self.best.as_ref().is_none_or(|(b, _)| rss < *b) {
                self.best = Some((rss, self.set.members().to_vec()));
            }
            return;
        }
        let remaining = self.k - self.set.len();
        for j in from..=(self.p - remaining) {
            self.set.push(j);
            self.descend(j + 1);
            self.set.pop();
            if self.stop.is_some() {
                return;
            }
        }
    }
}

/// Global optimum by enumerating all `k`-subsets in lexicographic order.
///
/// Refuses when `C(p, k)` exceeds [`EXHAUSTIVE_LIMIT`] unless `config.force`.
/// Each evaluated subset counts as one iteration.
pub fn exhaustive(data: &Dataset, k: usize, budget: &Budget, config: &SolverConfig) -> Result<RunOutcome> {
    let p = data.p();
    if k == 0 || k > p {
        return Err(Error::InvalidK { k, p });
    }
    let count = binomial(p as u64, k as u64);
    if count > EXHAUSTIVE_LIMIT && !config.force {
        return Err(Error::TooManySubsets { p, k, count, limit: EXHAUSTIVE_LIMIT });
    }
    let guard = Guard::start(*budget);
    let mut e = Enumerator { p, k, set: ActiveSet::new(data, false), guard: &guard, leaves: 0, best: None, stop: None };
    e.descend(0);
    let (rss, members) = e.best.unwrap_or_else(|| (f64::INFINITY, (0..k).collect()));
    let mut trace = Trace::new(config.trace);
    trace.push(rss);
    let stop = e.stop.unwrap_or(StopReason::Converged);
    finish(data, SupportSet::new(members), &guard, e.leaves, stop, trace, vec![format!("subsets: {count}")])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::dot;
    use nalgebra::DMatrix;

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(12, 4), 495);
        assert_eq!(binomial(10, 3), 120);
        assert_eq!(binomial(5, 0), 1);
        assert_eq!(binomial(3, 4), 0);
        assert_eq!(binomial(8000, 300), u128::MAX);
    }

    #[test]
    fn orthonormal_picks_largest_correlations() {
        let p = 6;
        let mut x = DMatrix::zeros(12, p);
        for j in 0..p {
            x[(2 * j, j)] = 1.0;
            x[(2 * j + 1, j)] = -1.0;
        }
        let y: Vec<f64> = (0..12).map(|i| ((i * 7 % 11) as f64) * 0.5 - 2.0).collect();
        let d = Dataset::new("orth", x, y).unwrap().standardize().unwrap();
        let out = exhaustive(&d, 3, &Budget::default(), &SolverConfig::default()).unwrap();
        let mut order: Vec<usize> = (0..p).collect();
        let score = |j: usize| dot(d.column(j), d.y()).powi(2);
        order.sort_by(|&a, &b| score(b).total_cmp(&score(a)).then(a.cmp(&b)));
        let expected = SupportSet::new(order[..3].to_vec());
        assert_eq!(out.solution.support, expected);
        assert_eq!(out.diagnostics.iterations, 20);
    }

    #[test]
    fn refuses_huge_enumerations() {
        let d = Dataset::new("t", DMatrix::from_fn(3, 60, |i, j| (i + j) as f64), vec![0.0; 3]).unwrap();
        let err = exhaustive(&d, 20, &Budget::default(), &SolverConfig::default()).unwrap_err();
        assert!(matches!(err, Error::TooManySubsets { .. }));
    }
}
