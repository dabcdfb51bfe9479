//! Least-squares kernels shared by every selector.
//!
//! * [`subset_rss`]: exact minimum RSS on a support (pivoted QR, minimum-norm
//!   under rank deficiency).
//! * [`gain`] / [`reduction`]: RSS change from dropping / adding a set.
//! * [`spectral_bound`]: largest eigenvalue of `X^T X` by power iteration.
//! * [`full_least_squares`]: minimum-norm OLS on all columns.
//! * [`ActiveSet`]: incremental engine used in the selectors' inner loops.

mod active;
pub mod qr;

pub use active::ActiveSet;

use nalgebra::DMatrix;

use crate::dataset::{dot, Dataset, SubsetSolution, SupportSet};
use crate::error::{Error, Result};

fn gather_columns(data: &Dataset, cols: &[usize]) -> Vec<f64> {
    let mut a = Vec::with_capacity(data.n() * cols.len());
    for &j in cols {
        a.extend_from_slice(data.column(j));
    }
    a
}

/// Exact least-squares fit on `support`.
pub fn subset_rss(data: &Dataset, support: &SupportSet) -> Result<SubsetSolution> {
    support.validate(data.p())?;
    let cols = support.indices();
    let (beta, rss, _) = qr::lstsq(gather_columns(data, cols), data.n(), cols.len(), data.y());
    Ok(SubsetSolution { support: support.clone(), beta, rss })
}

/// `q(support \ drop) - q(support)`.
pub fn gain(data: &Dataset, support: &SupportSet, drop: &SupportSet) -> Result<f64> {
    support.validate(data.p())?;
    if !drop.is_subset_of(support) {
        return Err(Error::InvalidArgument(format!("drop set {drop} is not a subset of {support}")));
    }
    if drop.is_empty() {
        return Ok(0.0);
    }
    let full = subset_rss(data, support)?.rss;
    let reduced = subset_rss(data, &support.difference(drop))?.rss;
    Ok(reduced - full)
}

/// `q(support) - q(support ∪ add)`.
pub fn reduction(data: &Dataset, support: &SupportSet, add: &SupportSet) -> Result<f64> {
    support.validate(data.p())?;
    add.validate(data.p())?;
    if !add.is_disjoint(support) {
        return Err(Error::InvalidArgument(format!("add set {add} overlaps {support}")));
    }
    if add.is_empty() {
        return Ok(0.0);
    }
    let base = subset_rss(data, support)?.rss;
    let grown = subset_rss(data, &support.union(add))?.rss;
    Ok(base - grown)
}

/// `λ_max(X^T X)` by power iteration from the all-ones start vector.
pub fn spectral_bound(data: &Dataset) -> f64 {
    let (n, p) = (data.n(), data.p());
    let mut v = vec![1.0 / (p as f64).sqrt(); p];
    let mut xv = vec![0.0; n];
    let mut lambda = 0.0f64;
    let mut stalls = 0;
    for _ in 0..100_000 {
        xv.iter_mut().for_each(|a| *a = 0.0);
        for (j, &vj) in v.iter().enumerate() {
            if vj != 0.0 {
                xv.iter_mut().zip(data.column(j)).for_each(|(a, b)| *a += vj * b);
            }
        }
        // Rayleigh quotient v^T X^T X v with ||v|| = 1
        let next = dot(&xv, &xv);
        let mut w: Vec<f64> = (0..p).map(|j| dot(data.column(j), &xv)).collect();
        let norm = dot(&w, &w).sqrt();
        if norm == 0.0 {
            return next;
        }
        w.iter_mut().for_each(|a| *a /= norm);
        v = w;
        if (next - lambda).abs() <= 1e-15 * next {
            stalls += 1;
            if stalls >= 3 {
                return next;
            }
        } else {
            stalls = 0;
        }
        lambda = next;
    }
    lambda
}

/// Minimum-norm least-squares coefficients on all p columns.
pub fn full_least_squares(data: &Dataset) -> Vec<f64> {
    let (beta, _, _) = qr::lstsq(data.x().as_slice().to_vec(), data.n(), data.p(), data.y());
    beta
}

/// `X^T X` as a dense p × p matrix.
pub fn gram(data: &Dataset) -> DMatrix<f64> {
    let p = data.p();
    let mut g = DMatrix::zeros(p, p);
    for a in 0..p {
        for b in a..p {
            let v = dot(data.column(a), data.column(b));
            g[(a, b)] = v;
            g[(b, a)] = v;
        }
    }
    g
}
