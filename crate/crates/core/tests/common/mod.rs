#![allow(dead_code)]

use bestsubset::{Dataset, SupportSet};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Standardized random instance with a sparse signal plus noise.
pub fn instance(n: usize, p: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut y = vec![0.0; n];
    for j in 0..p.min(4) {
        let b: f64 = rng.random_range(-2.0..2.0);
        for i in 0..n {
            y[i] += b * x[(i, 3 * j % p)];
        }
    }
    for v in &mut y {
        *v += rng.sample::<f64, _>(StandardNormal);
    }
    Dataset::new(format!("inst-{seed}"), x, y).unwrap().standardize().unwrap()
}

/// Columns `support` of `X`.
pub fn submatrix(data: &Dataset, support: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(data.n(), support.len(), |i, c| data.x()[(i, support[c])])
}

/// Least-squares RSS through an SVD pseudoinverse.
pub fn oracle_rss(data: &Dataset, support: &[usize]) -> f64 {
    let y = DVector::from_column_slice(data.y());
    if support.is_empty() {
        return y.norm_squared();
    }
    let a = submatrix(data, support);
    let beta = a.clone().svd(true, true).solve(&y, 1e-12).unwrap();
    (y - a * beta).norm_squared()
}

/// Normal-equations solve `(AᵀA) β = Aᵀ y` through a dense Cholesky factor.
pub fn normal_equations(a: &DMatrix<f64>, y: &[f64]) -> DVector<f64> {
    let y = DVector::from_column_slice(y);
    let ata = a.transpose() * a;
    ata.cholesky().expect("full column rank").solve(&(a.transpose() * y))
}

/// Greedy forward selection recomputing every candidate from scratch.
pub fn naive_greedy(data: &Dataset, k: usize) -> Vec<usize> {
    let mut chosen: Vec<usize> = Vec::new();
    for _ in 0..k {
        let rss: Vec<(usize, f64)> = (0..data.p())
            .filter(|j| !chosen.contains(j))
            .map(|j| (j, oracle_rss(data, &[chosen.as_slice(), &[j]].concat())))
            .collect();
        let min = rss.iter().map(|&(_, r)| r).fold(f64::INFINITY, f64::min);
        let pick = rss.iter().find(|&&(_, r)| r <= min + 1e-12 * data.y_norm_sq()).unwrap().0;
        chosen.push(pick);
    }
    chosen.sort_unstable();
    chosen
}

/// All `k`-subsets of `0..p` in lexicographic order.
pub fn combinations(p: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut c: Vec<usize> = (0..k).collect();
    loop {
        out.push(c.clone());
        let Some(i) = (0..k).rev().find(|&i| c[i] != i + p - k) else { return out };
        c[i] += 1;
        for j in i + 1..k {
            c[j] = c[j - 1] + 1;
        }
    }
}

/// Brute-force `min RSS` over all `k`-subsets, via the SVD oracle.
pub fn brute_force(data: &Dataset, k: usize) -> (f64, SupportSet) {
    combinations(data.p(), k)
        .into_iter()
        .map(|s| (oracle_rss(data, &s), s))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(r, s)| (r, SupportSet::new(s)))
        .unwrap()
}

/// `H_k` by sorting indices on `|c|` descending, then index ascending.
pub fn sort_threshold(c: &[f64], k: usize) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..c.len()).collect();
    idx.sort_by(|&a, &b| c[b].abs().total_cmp(&c[a].abs()).then(a.cmp(&b)));
    let mut out = vec![0.0; c.len()];
    for &j in idx.iter().take(k) {
        out[j] = c[j];
    }
    out
}

/// Largest eigenvalue of `XᵀX` from a dense symmetric eigensolver.
pub fn dense_lambda_max(data: &Dataset) -> f64 {
    let g = data.x().transpose() * data.x();
    g.symmetric_eigen().eigenvalues.max()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
