//! Incremental least squares over a growing/shrinking predictor set.
//!
//! `ActiveSet` keeps an orthonormal basis of the span of its members (modified
//! Gram–Schmidt with one reorthogonalization pass), the current residual, and,
//! when candidate tracking is on, `X^T r` and the squared norms of every column
//! projected onto the orthogonal complement. Those two vectors give the RSS
//! reduction of every single-column addition in O(p):
//!
//! ```text
//! R({j}) = (x_j^T r)^2 / ||(I - QQ^T) x_j||^2
//! ```
//!
//! Members whose column is numerically dependent on earlier members are kept
//! but contribute no basis vector.

use crate::dataset::{dot, Dataset};

use super::qr::RANK_TOL;

/// Relative size below which downdated quantities are recomputed explicitly.
const REFRESH_RATIO: f64 = 1e-6;

#[derive(Debug, Clone)]
struct Tracking {
    /// `X^T q_l` for each basis vector.
    cross: Vec<Vec<f64>>,
    /// `X^T r` for the current residual.
    xt_res: Vec<f64>,
    /// `||(I - QQ^T) x_j||^2` for every column.
    proj_sq: Vec<f64>,
    /// `||x_j||^2`.
    col_sq: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ActiveSet<'a> {
    data: &'a Dataset,
    members: Vec<usize>,
    /// Basis slot owned by each member, `None` when the column was dependent.
    slots: Vec<Option<usize>>,
    basis: Vec<Vec<f64>>,
    /// Coefficients of each member's column on the basis vectors that existed
    /// when it was pushed (including its own slot).
    rcols: Vec<Vec<f64>>,
    /// MGS coefficient of y on each basis vector.
    ycoef: Vec<f64>,
    residual: Vec<f64>,
    rss: f64,
    tracking: Option<Tracking>,
}

impl<'a> ActiveSet<'a> {
    /// Empty set. With `track = true` every push also updates per-candidate
    /// statistics, at O(np) extra cost.
    pub fn new(data: &'a Dataset, track: bool) -> Self {
        let residual = data.y().to_vec();
        let rss = dot(&residual, &residual);
        let tracking = track.then(|| {
            let p = data.p();
            let xt_res: Vec<f64> = (0..p).map(|j| dot(data.column(j), &residual)).collect();
            let col_sq: Vec<f64> = (0..p).map(|j| dot(data.column(j), data.column(j))).collect();
            Tracking { cross: Vec::new(), xt_res, proj_sq: col_sq.clone(), col_sq }
        });
        Self {
            data,
            members: Vec::new(),
            slots: Vec::new(),
            basis: Vec::new(),
            rcols: Vec::new(),
            ycoef: Vec::new(),
            residual,
            rss,
            tracking,
        }
    }

    pub fn with_members(data: &'a Dataset, members: &[usize], track: bool) -> Self {
        let mut set = Self::new(data, track);
        for &j in members {
            set.push(j);
        }
        set
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.members.contains(&j)
    }

    pub fn rss(&self) -> f64 {
        self.rss
    }

    pub fn residual(&self) -> &[f64] {
        &self.residual
    }

    pub fn is_tracking(&self) -> bool {
        self.tracking.is_some()
    }

    /// True when every member owns a basis vector.
    pub fn is_full_rank(&self) -> bool {
        self.slots.iter().all(Option::is_some)
    }

    /// Adds column `j`. Returns false when it was numerically dependent.
    pub fn push(&mut self, j: usize) -> bool {
        let x = self.data.column(j);
        let mut v = x.to_vec();
        let mut coeffs = vec![0.0; self.basis.len() + 1];
        for _ in 0..2 {
            for (l, q) in self.basis.iter().enumerate() {
                let c = dot(q, &v);
                coeffs[l] += c;
                v.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
            }
        }
        let norm = dot(&v, &v).sqrt();
        let xnorm = dot(x, x).sqrt();
        self.members.push(j);
        if !(norm > RANK_TOL * xnorm) || norm == 0.0 {
            coeffs.pop();
            self.slots.push(None);
            self.rcols.push(coeffs);
            return false;
        }
        v.iter_mut().for_each(|a| *a /= norm);
        *coeffs.last_mut().unwrap() = norm;
        let slot = self.basis.len();
        let yc = dot(&v, &self.residual);
        self.residual.iter_mut().zip(&v).for_each(|(r, q)| *r -= yc * q);
        self.rss = dot(&self.residual, &self.residual);
        if let Some(t) = self.tracking.as_mut() {
            let cross: Vec<f64> = (0..self.data.p()).map(|c| dot(self.data.column(c), &v)).collect();
            for c in 0..cross.len() {
                t.xt_res[c] -= yc * cross[c];
                t.proj_sq[c] -= cross[c] * cross[c];
            }
            t.cross.push(cross);
        }
        self.basis.push(v);
        self.ycoef.push(yc);
        self.slots.push(Some(slot));
        self.rcols.push(coeffs);
        true
    }

    /// Removes the most recently pushed member.
    pub fn pop(&mut self) -> Option<usize> {
        let j = self.members.pop()?;
        self.rcols.pop();
        if let Some(Some(_)) = self.slots.pop() {
            let q = self.basis.pop().unwrap();
            let yc = self.ycoef.pop().unwrap();
            self.residual.iter_mut().zip(&q).for_each(|(r, b)| *r += yc * b);
            self.rss = dot(&self.residual, &self.residual);
            if let Some(t) = self.tracking.as_mut() {
                let cross = t.cross.pop().unwrap();
                for c in 0..cross.len() {
                    t.xt_res[c] += yc * cross[c];
                    t.proj_sq[c] += cross[c] * cross[c];
                }
            }
        }
        Some(j)
    }

    /// `(I - QQ^T) x_j`, computed explicitly with two projection passes.
    fn project_out(&self, j: usize) -> Vec<f64> {
        let mut v = self.data.column(j).to_vec();
        for _ in 0..2 {
            for q in &self.basis {
                let c = dot(q, &v);
                v.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
            }
        }
        v
    }

    /// Squared norm of the projected column. The downdated value loses
    /// accuracy once it is small relative to `||x_j||^2`, so it is recomputed.
    fn projected_sq(&self, t: &Tracking, j: usize) -> f64 {
        let d = t.proj_sq[j];
        if d > REFRESH_RATIO * t.col_sq[j] {
            d
        } else {
            let v = self.project_out(j);
            dot(&v, &v)
        }
    }

    /// RSS reduction from adding column `j`, zero when `j` is in the span.
    ///
    /// Panics if tracking is off.
    pub fn add_reduction(&self, j: usize) -> f64 {
        let t = self.tracking.as_ref().expect("candidate tracking disabled");
        if self.contains(j) {
            return 0.0;
        }
        let d = self.projected_sq(t, j);
        if !(d > (RANK_TOL * RANK_TOL) * t.col_sq[j]) {
            return 0.0;
        }
        let c = t.xt_res[j];
        c * c / d
    }

    /// Projected inner product `((I-QQ^T)x_a)^T (I-QQ^T)x_b`, given `x_a^T x_b`.
    pub fn projected_cross(&self, a: usize, b: usize, gram_ab: f64) -> f64 {
        let t = self.tracking.as_ref().expect("candidate tracking disabled");
        gram_ab - t.cross.iter().map(|c| c[a] * c[b]).sum::<f64>()
    }

    /// RSS reduction from adding the pair `{a, b}`, given `x_a^T x_b`.
    pub fn pair_reduction(&self, a: usize, b: usize, gram_ab: f64) -> f64 {
        let t = self.tracking.as_ref().expect("candidate tracking disabled");
        let tol = RANK_TOL * RANK_TOL;
        let (da, db) = (self.projected_sq(t, a), self.projected_sq(t, b));
        let a_ok = da > tol * t.col_sq[a];
        let b_ok = db > tol * t.col_sq[b];
        match (a_ok, b_ok) {
            (false, false) => 0.0,
            (true, false) => self.add_reduction(a),
            (false, true) => self.add_reduction(b),
            (true, true) => {
                let m = self.projected_cross(a, b, gram_ab);
                let (ca, cb) = (t.xt_res[a], t.xt_res[b]);
                let first = ca * ca / da;
                let schur = db - m * m / da;
                if !(schur > REFRESH_RATIO * db) {
                    return self.exact_pair_reduction(a, b);
                }
                let resid = cb - m / da * ca;
                first + resid * resid / schur
            }
        }
    }

    /// Pair reduction from explicitly projected columns, for nearly collinear pairs.
    fn exact_pair_reduction(&self, a: usize, b: usize) -> f64 {
        let va = self.project_out(a);
        let mut vb = self.project_out(b);
        let na = dot(&va, &va);
        let ca = dot(&va, &self.residual);
        let first = ca * ca / na;
        for _ in 0..2 {
            let c = dot(&va, &vb) / na;
            vb.iter_mut().zip(&va).for_each(|(x, y)| *x -= c * y);
        }
        let nb = dot(&vb, &vb);
        if !(nb > (RANK_TOL * RANK_TOL) * dot(self.data.column(b), self.data.column(b))) {
            return first;
        }
        let cb = dot(&vb, &self.residual);
        first + cb * cb / nb
    }

    /// Triangular inverse and coefficients of the current fit, when full rank.
    fn inverse_factor(&self) -> Option<(Vec<Vec<f64>>, Vec<f64>)> {
        if !self.is_full_rank() {
            return None;
        }
        let r = self.members.len();
        // R[l][i] = rcols[i][l] for l <= i; invert column by column
        let mut inv = vec![vec![0.0; r]; r];
        for i in (0..r).rev() {
            inv[i][i] = 1.0 / self.rcols[i][i];
            for c in i + 1..r {
                let mut s = 0.0;
                for l in i + 1..=c {
                    s += self.rcols[l][i] * inv[l][c];
                }
                inv[i][c] = -s / self.rcols[i][i];
            }
        }
        let beta: Vec<f64> = (0..r).map(|i| (i..r).map(|c| inv[i][c] * self.ycoef[c]).sum()).collect();
        Some((inv, beta))
    }

    /// RSS gain from dropping each member, in member order. `None` when the
    /// members are numerically dependent (callers fall back to exact solves).
    pub fn drop_gains(&self) -> Option<Vec<f64>> {
        let (inv, beta) = self.inverse_factor()?;
        let r = self.members.len();
        Some(
            (0..r)
                .map(|i| {
                    let s: f64 = (i..r).map(|c| inv[i][c] * inv[i][c]).sum();
                    beta[i] * beta[i] / s
                })
                .collect(),
        )
    }

    /// RSS gain from dropping members at positions `a` and `b`.
    pub fn pair_drop_gains(&self) -> Option<Vec<((usize, usize), f64)>> {
        let (inv, beta) = self.inverse_factor()?;
        let r = self.members.len();
        let cov = |a: usize, b: usize| -> f64 {
            (a.max(b)..r).map(|c| inv[a][c] * inv[b][c]).sum()
        };
        let mut out = Vec::with_capacity(r * r.saturating_sub(1) / 2);
        for a in 0..r {
            for b in a + 1..r {
                let (saa, sbb, sab) = (cov(a, a), cov(b, b), cov(a, b));
                let det = saa * sbb - sab * sab;
                let (ba, bb) = (beta[a], beta[b]);
                let g = (sbb * ba * ba - 2.0 * sab * ba * bb + saa * bb * bb) / det;
                out.push(((a, b), g));
            }
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::subset_rss;
    use crate::dataset::SupportSet;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_data(n: usize, p: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(n, p, |_, _| rng.random_range(-1.0..1.0));
        let y = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        Dataset::new("r", x, y).unwrap().standardize().unwrap()
    }

    #[test]
    fn push_pop_tracks_exact_rss() {
        let d = random_data(15, 6, 3);
        let mut set = ActiveSet::new(&d, true);
        for &j in &[4, 1, 2] {
            set.push(j);
            let exact = subset_rss(&d, &SupportSet::new(set.members().to_vec())).unwrap().rss;
            assert!((set.rss() - exact).abs() < 1e-12);
        }
        set.pop();
        let exact = subset_rss(&d, &SupportSet::new(vec![1, 4])).unwrap().rss;
        assert!((set.rss() - exact).abs() < 1e-12);
    }

    #[test]
    fn single_and_pair_reductions_match_exact() {
        let d = random_data(20, 7, 11);
        let set = ActiveSet::with_members(&d, &[0, 3], true);
        let base = set.rss();
        for j in [1, 2, 4, 5, 6] {
            let exact = base - subset_rss(&d, &SupportSet::new(vec![0, 3, j])).unwrap().rss;
            assert!((set.add_reduction(j) - exact).abs() < 1e-12);
        }
        let g = dot(d.column(2), d.column(5));
        let exact = base - subset_rss(&d, &SupportSet::new(vec![0, 2, 3, 5])).unwrap().rss;
        assert!((set.pair_reduction(2, 5, g) - exact).abs() < 1e-12);
    }

    #[test]
    fn drop_gains_match_exact() {
        let d = random_data(20, 7, 5);
        let members = [6, 2, 4, 0];
        let set = ActiveSet::with_members(&d, &members, false);
        let gains = set.drop_gains().unwrap();
        for (i, &j) in members.iter().enumerate() {
            let rest: Vec<usize> = members.iter().copied().filter(|&m| m != j).collect();
            let exact = subset_rss(&d, &SupportSet::new(rest)).unwrap().rss - set.rss();
            assert!((gains[i] - exact).abs() < 1e-12, "{} vs {exact}", gains[i]);
        }
        for ((a, b), g) in set.pair_drop_gains().unwrap() {
            let rest: Vec<usize> = members
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != a && *i != b)
                .map(|(_, &m)| m)
                .collect();
            let exact = subset_rss(&d, &SupportSet::new(rest)).unwrap().rss - set.rss();
            assert!((g - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn dependent_column_is_detected() {
        // third column = first + second
        let c0 = [1.0, -1.0, 0.5, 2.0, -2.5];
        let c1 = [0.3, 0.2, -1.0, 0.7, -0.2];
        let c2: Vec<f64> = c0.iter().zip(&c1).map(|(a, b)| a + b).collect();
        let mut v = c0.to_vec();
        v.extend_from_slice(&c1);
        v.extend_from_slice(&c2);
        let d = Dataset::new("dep", DMatrix::from_column_slice(5, 3, &v), vec![1.0, 2.0, 0.0, -1.0, 0.5]).unwrap();
        let mut set = ActiveSet::new(&d, true);
        assert!(set.push(0));
        assert!(set.push(1));
        assert_eq!(set.add_reduction(2), 0.0);
        assert!(!set.push(2));
        assert!(!set.is_full_rank());
        assert!(set.drop_gains().is_none());
    }
}
