//! Householder QR with column pivoting and a minimum-norm least-squares solve.
//!
//! The factorization stops as soon as the largest remaining column norm falls
//! below `RANK_TOL` times the first pivot; the trailing block is treated as
//! zero. When that happens the system is rank deficient and the solve returns
//! the minimum-norm solution through a second QR of the transposed leading
//! rows (a complete orthogonal decomposition).

/// Relative pivot threshold for numerical rank.
pub const RANK_TOL: f64 = 1e-12;

/// A Householder reflector `I - tau * v v^T` with `v[0] = 1` implied.
fn make_reflector(x: &mut [f64]) -> (f64, f64) {
    let alpha = x[0];
    let tail_sq: f64 = x[1..].iter().map(|v| v * v).sum();
    if tail_sq == 0.0 {
        return (0.0, alpha);
    }
    let norm = (alpha * alpha + tail_sq).sqrt();
    let beta = if alpha >= 0.0 { -norm } else { norm };
    let tau = (beta - alpha) / beta;
    let scale = 1.0 / (alpha - beta);
    x[1..].iter_mut().for_each(|v| *v *= scale);
    x[0] = 1.0;
    (tau, beta)
}

/// Applies `I - tau v v^T` to `y`, where `v` and `y` have the same length.
fn apply_reflector(v: &[f64], tau: f64, y: &mut [f64]) {
    if tau == 0.0 {
        return;
    }
    let s: f64 = v.iter().zip(y.iter()).map(|(a, b)| a * b).sum();
    let f = tau * s;
    y.iter_mut().zip(v).for_each(|(b, a)| *b -= f * a);
}

/// Column-pivoted QR of an n × m column-major matrix.
#[derive(Debug, Clone)]
pub struct PivotedQr {
    n: usize,
    m: usize,
    /// Column-major storage: R on and above the diagonal, reflectors below.
    a: Vec<f64>,
    tau: Vec<f64>,
    diag: Vec<f64>,
    perm: Vec<usize>,
    rank: usize,
}

impl PivotedQr {
    pub fn factor(mut a: Vec<f64>, n: usize, m: usize) -> Self {
        assert_eq!(a.len(), n * m);
        let mut perm: Vec<usize> = (0..m).collect();
        let steps = n.min(m);
        let mut tau = Vec::with_capacity(steps);
        let mut diag = Vec::with_capacity(steps);
        let mut first_pivot = 0.0f64;
        let mut rank = 0;
        for j in 0..steps {
            // pick the remaining column with the largest trailing norm, lowest index on ties
            let mut best = j;
            let mut best_norm = -1.0;
            for c in j..m {
                let col = &a[c * n + j..(c + 1) * n];
                let s: f64 = col.iter().map(|v| v * v).sum();
                if s > best_norm {
                    best_norm = s;
                    best = c;
                }
            }
            let best_norm = best_norm.sqrt();
            if j == 0 {
                first_pivot = best_norm;
            }
            if !(best_norm > RANK_TOL * first_pivot) || best_norm == 0.0 {
                break;
            }
            if best != j {
                for i in 0..n {
                    a.swap(j * n + i, best * n + i);
                }
                perm.swap(j, best);
            }
            let (t, beta) = make_reflector(&mut a[j * n + j..(j + 1) * n]);
            let (head, tail) = a.split_at_mut((j + 1) * n);
            let v = &head[j * n + j..(j + 1) * n];
            for c in 0..(m - j - 1) {
                apply_reflector(v, t, &mut tail[c * n + j..(c + 1) * n]);
            }
            tau.push(t);
            diag.push(beta);
            rank += 1;
        }
        Self { n, m, a, tau, diag, perm, rank }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// `b := Q^T b` using the `rank` computed reflectors.
    pub fn apply_qt(&self, b: &mut [f64]) {
        let n = self.n;
        for j in 0..self.rank {
            let mut v = self.a[j * n + j..(j + 1) * n].to_vec();
            v[0] = 1.0;
            apply_reflector(&v, self.tau[j], &mut b[j..]);
        }
    }

    /// Upper-triangular entry `R[i][c]` of the permuted factor (`i < rank`).
    fn r(&self, i: usize, c: usize) -> f64 {
        if i == c {
            self.diag[i]
        } else {
            self.a[c * self.n + i]
        }
    }

    /// Minimum-norm least-squares solution and residual sum of squares.
    pub fn solve(&self, y: &[f64]) -> (Vec<f64>, f64) {
        let (m, r) = (self.m, self.rank);
        let mut qty = y.to_vec();
        self.apply_qt(&mut qty);
        let rss: f64 = qty[r..].iter().map(|v| v * v).sum();
        let mut beta = vec![0.0; m];
        if r == 0 {
            return (beta, rss);
        }
        let c1 = &qty[..r];
        let z = if r == m {
            // back substitution on R11
            let mut z = vec![0.0; m];
            for i in (0..r).rev() {
                let mut s = c1[i];
                for c in i + 1..r {
                    s -= self.r(i, c) * z[c];
                }
                z[i] = s / self.r(i, i);
            }
            z
        } else {
            self.min_norm(c1)
        };
        for (i, &pj) in self.perm.iter().enumerate() {
            beta[pj] = z[i];
        }
        (beta, rss)
    }

    /// Solves `[R11 R12] z = c` with minimal `||z||` via QR of `[R11 R12]^T`.
    fn min_norm(&self, c: &[f64]) -> Vec<f64> {
        let (m, r) = (self.m, self.rank);
        // T^T is m × r, column i holds row i of [R11 R12]
        let mut tt = vec![0.0; m * r];
        for i in 0..r {
            for c in i..m {
                tt[i * m + c] = self.r(i, c);
            }
        }
        let mut taus = Vec::with_capacity(r);
        let mut diag = Vec::with_capacity(r);
        for j in 0..r {
            let (t, beta) = make_reflector(&mut tt[j * m + j..(j + 1) * m]);
            let (head, tail) = tt.split_at_mut((j + 1) * m);
            let v = &head[j * m + j..(j + 1) * m];
            for col in 0..(r - j - 1) {
                apply_reflector(v, t, &mut tail[col * m + j..(col + 1) * m]);
            }
            taus.push(t);
            diag.push(beta);
        }
        // T = R2^T Q2^T, so solve R2^T w = c by forward substitution
        let mut w = vec![0.0; m];
        for i in 0..r {
            let mut s = c[i];
            for l in 0..i {
                s -= tt[i * m + l] * w[l];
            }
            w[i] = s / diag[i];
        }
        // z = Q2 [w; 0]
        for j in (0..r).rev() {
            let mut v = tt[j * m + j..(j + 1) * m].to_vec();
            v[0] = 1.0;
            apply_reflector(&v, taus[j], &mut w[j..]);
        }
        w
    }
}

/// Minimum-norm least squares for column-major `a` (n × m).
pub fn lstsq(a: Vec<f64>, n: usize, m: usize, y: &[f64]) -> (Vec<f64>, f64, usize) {
    if m == 0 {
        let rss = y.iter().map(|v| v * v).sum();
        return (Vec::new(), rss, 0);
    }
    let qr = PivotedQr::factor(a, n, m);
    let (beta, rss) = qr.solve(y);
    (beta, rss, qr.rank())
}
