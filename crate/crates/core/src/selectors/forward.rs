use log::debug;

use super::{
    add_scores, argmax_excluding, finish, tie_tolerance, Budget, Guard, RunOutcome, SolverConfig, StopReason, Trace,
};
use crate::dataset::{Dataset, SupportSet};
use crate::error::{Error, Result};
use crate::linalg::ActiveSet;

/// Greedy forward selection: add the column with the largest RSS reduction
/// until `k` columns are selected.
///
/// On budget exhaustion the partial support selected so far is returned.
pub fn forward_selection(data: &Dataset, k: usize, budget: &Budget, config: &SolverConfig) -> Result<RunOutcome> {
    if k == 0 || k > data.p() {
        return Err(Error::InvalidK { k, p: data.p() });
    }
    let guard = Guard::start(*budget);
    let mut trace = Trace::new(config.trace);
    let mut set = ActiveSet::new(data, !config.naive);
    let tol = tie_tolerance(data);
    let mut iterations = 0u64;
    let mut stop = StopReason::Converged;
    while set.len() < k {
        if let Some(reason) = guard.check(iterations) {
            stop = reason;
            break;
        }
        let scores = add_scores(data, &set, config.naive);
        let j = argmax_excluding(&scores, tol, |j| set.contains(j)).expect("k <= p leaves a candidate");
        set.push(j);
        iterations += 1;
        trace.push(set.rss());
        debug!("FS step {iterations}: added {} rss={}", j + 1, set.rss());
    }
    let support = SupportSet::new(set.members().to_vec());
    finish(data, support, &guard, iterations, stop, trace, Vec::new())
}
