//! Synthetic problems with correlated Gaussian designs.
//!
//! Rows of `X` are drawn from `N(0, Σ)` with `Σ` either constant-correlation
//! (`Σ_ij = ρ`, `i ≠ j`) or exponential (`Σ_ij = ρ^|i-j|`). Columns are then
//! standardized, the true coefficients `β⁰` are built by one of three schemes,
//! and `y = Xβ⁰ + ε` with `ε ~ N(0, σ² I)` and `σ² = ||Xβ⁰||² / SNR`.
//!
//! Each purpose draws from its own ChaCha stream of the root seed, so changing
//! the SNR or the coefficient scheme leaves `X` untouched.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::{dot, Dataset, SupportSet};
use crate::error::{Error, Result};

const STREAM_DESIGN: u64 = 1;
const STREAM_SUPPORT: u64 = 2;
const STREAM_VALUES: u64 = 3;
const STREAM_NOISE: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationKind {
    Constant,
    Exponential,
}

impl fmt::Display for CorrelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CorrelationKind::Constant => "constant",
            CorrelationKind::Exponential => "exponential",
        })
    }
}

impl FromStr for CorrelationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "constant" | "const" => Ok(CorrelationKind::Constant),
            "exponential" | "exp" => Ok(CorrelationKind::Exponential),
            other => Err(Error::InvalidArgument(format!("unknown correlation kind `{other}`"))),
        }
    }
}

/// Construction scheme for the true coefficient vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum ExampleKind {
    /// Ones at `k0` equally spaced indices `ceil(j p / k0)`.
    Equispaced,
    /// Ones on the first `k0` indices.
    Prefix,
    /// A random `k0`-subset with integer values drawn from `1..=5`.
    Random,
}

impl ExampleKind {
    pub fn number(&self) -> u8 {
        match self {
            ExampleKind::Equispaced => 1,
            ExampleKind::Prefix => 2,
            ExampleKind::Random => 3,
        }
    }
}

impl TryFrom<u8> for ExampleKind {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(ExampleKind::Equispaced),
            2 => Ok(ExampleKind::Prefix),
            3 => Ok(ExampleKind::Random),
            other => Err(Error::InvalidArgument(format!("example must be 1, 2 or 3, got {other}"))),
        }
    }
}

impl From<ExampleKind> for u8 {
    fn from(e: ExampleKind) -> u8 {
        e.number()
    }
}

fn default_rho() -> f64 {
    0.8
}

fn default_k0() -> usize {
    10
}

/// Parameters of one synthetic problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub n: usize,
    pub p: usize,
    pub correlation: CorrelationKind,
    #[serde(default = "default_rho")]
    pub rho: f64,
    pub example: ExampleKind,
    #[serde(default = "default_k0")]
    pub k0: usize,
    pub snr: f64,
    #[serde(default)]
    pub seed: u64,
}

impl GenSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 {
            return Err(Error::InvalidArgument(format!("n and p must be positive, got n={} p={}", self.n, self.p)));
        }
        if self.n < 2 {
            return Err(Error::InvalidArgument("n >= 2 is needed to standardize columns".into()));
        }
        if self.k0 == 0 || self.k0 > self.p {
            return Err(Error::InvalidArgument(format!("k0 = {} must lie in 1..={}", self.k0, self.p)));
        }
        if !(self.snr > 0.0) || !self.snr.is_finite() {
            return Err(Error::InvalidArgument(format!("snr must be positive, got {}", self.snr)));
        }
        if !(self.rho.abs() < 1.0) {
            return Err(Error::InvalidArgument(format!("|rho| must be < 1, got {}", self.rho)));
        }
        Ok(())
    }
}

/// The coefficients and noise level behind a generated problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub beta0: Vec<f64>,
    pub sigma2: f64,
    /// Zero-based indices of the nonzero coefficients.
    pub true_support: Vec<usize>,
}

impl GroundTruth {
    pub fn support(&self) -> SupportSet {
        SupportSet::new(self.true_support.clone())
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// The p × p correlation matrix.
pub fn covariance(p: usize, kind: CorrelationKind, rho: f64) -> DMatrix<f64> {
    DMatrix::from_fn(p, p, |i, j| {
        if i == j {
            1.0
        } else {
            match kind {
                CorrelationKind::Constant => rho,
                CorrelationKind::Exponential => rho.powi((i as i32 - j as i32).abs()),
            }
        }
    })
}

/// Lower Cholesky factor of [`covariance`], built column by column from its
/// closed form: both correlation structures have factors whose entries depend
/// on O(1) values per column, which lets rows be drawn in O(p).
#[derive(Debug, Clone)]
enum Factor {
    /// `L_ij = c_j` below the diagonal, `L_jj = a_j`.
    Constant { a: Vec<f64>, c: Vec<f64> },
    /// `x_1 = z_1`, `x_j = ρ x_{j-1} + sqrt(1 - ρ²) z_j`.
    Exponential { rho: f64, s: f64 },
}

impl Factor {
    fn new(p: usize, kind: CorrelationKind, rho: f64) -> Result<Self> {
        match kind {
            CorrelationKind::Constant => {
                let mut a = Vec::with_capacity(p);
                let mut c = Vec::with_capacity(p);
                let mut acc = 0.0_f64;
                for _ in 0..p {
                    let d = 1.0 - acc;
                    if !(d > 0.0) {
                        return Err(Error::Generation(format!(
                            "correlation matrix with rho = {rho} is not positive definite at p = {p}"
                        )));
                    }
                    let aj = d.sqrt();
                    let cj = (rho - acc) / aj;
                    a.push(aj);
                    c.push(cj);
                    acc += cj * cj;
                }
                Ok(Factor::Constant { a, c })
            }
            CorrelationKind::Exponential => Ok(Factor::Exponential { rho, s: (1.0 - rho * rho).sqrt() }),
        }
    }

    /// `x = L z`.
    fn apply(&self, z: &[f64], x: &mut [f64]) {
        match self {
            Factor::Constant { a, c } => {
                let mut prefix = 0.0;
                for j in 0..z.len() {
                    x[j] = prefix + a[j] * z[j];
                    prefix += c[j] * z[j];
                }
            }
            Factor::Exponential { rho, s } => {
                let mut prev = 0.0;
                for j in 0..z.len() {
                    x[j] = if j == 0 { z[0] } else { rho * prev + s * z[j] };
                    prev = x[j];
                }
            }
        }
    }

    #[cfg(test)]
    fn dense(&self, p: usize) -> DMatrix<f64> {
        let mut l = DMatrix::zeros(p, p);
        let mut x = vec![0.0; p];
        for j in 0..p {
            let mut e = vec![0.0; p];
            e[j] = 1.0;
            self.apply(&e, &mut x);
            l.set_column(j, &nalgebra::DVector::from_column_slice(&x));
        }
        l
    }
}

/// The raw n × p design before standardization.
pub fn sample_design(spec: &GenSpec) -> Result<DMatrix<f64>> {
    spec.validate()?;
    let (n, p) = (spec.n, spec.p);
    let factor = Factor::new(p, spec.correlation, spec.rho)?;
    let mut rng = stream(spec.seed, STREAM_DESIGN);
    let mut x = DMatrix::zeros(n, p);
    let mut z = vec![0.0; p];
    let mut row = vec![0.0; p];
    for i in 0..n {
        z.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
        factor.apply(&z, &mut row);
        for (j, &v) in row.iter().enumerate() {
            x[(i, j)] = v;
        }
    }
    Ok(x)
}

/// True coefficients and their support for `spec`.
pub fn make_beta0(spec: &GenSpec) -> Result<(Vec<f64>, SupportSet)> {
    spec.validate()?;
    let (p, k0) = (spec.p, spec.k0);
    let mut beta = vec![0.0; p];
    let support = match spec.example {
        ExampleKind::Equispaced => SupportSet::new((1..=k0).map(|j| (j * p).div_ceil(k0) - 1).collect()),
        ExampleKind::Prefix => SupportSet::new((0..k0).collect()),
        ExampleKind::Random => SupportSet::new(sample(&mut stream(spec.seed, STREAM_SUPPORT), p, k0).into_vec()),
    };
    match spec.example {
        ExampleKind::Random => {
            let mut rng = stream(spec.seed, STREAM_VALUES);
            for &j in support.indices() {
                beta[j] = rng.random_range(1..=5) as f64;
            }
        }
        _ => support.indices().iter().for_each(|&j| beta[j] = 1.0),
    }
    Ok((beta, support))
}

/// Generates the standardized dataset and its ground truth.
pub fn generate(spec: &GenSpec) -> Result<(Dataset, GroundTruth)> {
    let mut x = sample_design(spec)?;
    let names: Vec<String> = (1..=spec.p).map(|j| format!("x{j}")).collect();
    crate::dataset::standardize_columns(&mut x, &names)?;
    let (beta0, support) = make_beta0(spec)?;
    let n = spec.n;
    let mut signal = vec![0.0; n];
    for &j in support.indices() {
        let col = &x.as_slice()[j * n..(j + 1) * n];
        signal.iter_mut().zip(col).for_each(|(s, v)| *s += beta0[j] * v);
    }
    let sigma2 = dot(&signal, &signal) / spec.snr;
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::Generation(format!("degenerate signal: ||X beta0||^2 / snr = {sigma2}")));
    }
    let sigma = sigma2.sqrt();
    let mut rng = stream(spec.seed, STREAM_NOISE);
    let y: Vec<f64> = signal.iter().map(|s| s + sigma * rng.sample::<f64, _>(StandardNormal)).collect();
    let name = format!(
        "n{}-p{}-{}-ex{}-snr{}-seed{}",
        spec.n,
        spec.p,
        spec.correlation,
        spec.example.number(),
        spec.snr,
        spec.seed
    );
    let data = Dataset::new(name, x, y)?.with_column_names(names)?.assume_standardized(true)?;
    Ok((data, GroundTruth { beta0, sigma2, true_support: support.indices().to_vec() }))
}

/// Overdetermined (p < n) or underdetermined (p ≫ n) case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Regime {
    #[serde(rename = "OD")]
    Od,
    #[serde(rename = "UD")]
    Ud,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Od => "OD",
            Regime::Ud => "UD",
        })
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "OD" => Ok(Regime::Od),
            "UD" => Ok(Regime::Ud),
            other => Err(Error::InvalidArgument(format!("unknown regime `{other}`"))),
        }
    }
}

/// Dimension types: `(name, p, n for OD, n for UD)`.
pub const DIMENSIONS: [(&str, usize, usize, usize); 12] = [
    ("small-1", 20, 100, 10),
    ("small-2", 40, 200, 20),
    ("small-3", 60, 300, 30),
    ("small-4", 80, 400, 40),
    ("medium-1", 200, 1000, 100),
    ("medium-2", 300, 1000, 100),
    ("medium-3", 400, 2000, 100),
    ("medium-4", 500, 2000, 100),
    ("large-1", 800, 4000, 200),
    ("large-2", 1000, 4000, 200),
    ("large-3", 1500, 8000, 300),
    ("large-4", 2000, 8000, 300),
];

pub const SNRS: [f64; 4] = [0.05, 0.5, 1.0, 5.0];
pub const TARGET_KS: [usize; 2] = [5, 10];

/// Looks up `(p, n)` for a dimension type and regime.
pub fn dimension(name: &str, regime: Regime) -> Option<(usize, usize)> {
    DIMENSIONS.iter().find(|d| d.0 == name).map(|&(_, p, od, ud)| {
        (
            p,
            match regime {
                Regime::Od => od,
                Regime::Ud => ud,
            },
        )
    })
}

/// One problem of the benchmark grid with its solve targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridEntry {
    pub dim_type: String,
    pub regime: Regime,
    pub spec: GenSpec,
    pub ks: Vec<usize>,
}

impl GridEntry {
    pub fn id(&self) -> String {
        format!(
            "{}-{}-ex{}-{}-snr{}",
            self.dim_type,
            self.regime,
            self.spec.example.number(),
            self.spec.correlation,
            self.spec.snr
        )
    }
}

/// Factors of a grid; [`GridSelection::full`] is the complete benchmark grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSelection {
    pub dims: Vec<String>,
    pub regimes: Vec<Regime>,
    pub examples: Vec<ExampleKind>,
    pub correlations: Vec<CorrelationKind>,
    pub snrs: Vec<f64>,
    pub ks: Vec<usize>,
    pub rho: f64,
    pub k0: usize,
    pub seed: u64,
}

impl Default for GridSelection {
    fn default() -> Self {
        Self::full()
    }
}

impl GridSelection {
    pub fn full() -> Self {
        Self {
            dims: DIMENSIONS.iter().map(|d| d.0.to_string()).collect(),
            regimes: vec![Regime::Od, Regime::Ud],
            examples: vec![ExampleKind::Equispaced, ExampleKind::Prefix, ExampleKind::Random],
            correlations: vec![CorrelationKind::Constant, CorrelationKind::Exponential],
            snrs: SNRS.to_vec(),
            ks: TARGET_KS.to_vec(),
            rho: 0.8,
            k0: 10,
            seed: 1,
        }
    }

    /// Expands the factorial product; dimension types are validated.
    pub fn expand(&self) -> Result<Vec<GridEntry>> {
        let mut out = Vec::new();
        for dim in &self.dims {
            for &regime in &self.regimes {
                let (p, n) = dimension(dim, regime)
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown dimension type `{dim}`")))?;
                for &snr in &self.snrs {
                    for &example in &self.examples {
                        for &correlation in &self.correlations {
                            let spec =
                                GenSpec { n, p, correlation, rho: self.rho, example, k0: self.k0, snr, seed: self.seed };
                            out.push(GridEntry { dim_type: dim.clone(), regime, spec, ks: self.ks.clone() });
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// The full benchmark grid: 12 dimension types, both regimes, 4 SNRs, 3
/// examples, 2 correlation structures.
pub fn standard_grid() -> Vec<GridEntry> {
    GridSelection::full().expand().expect("built-in dimension names are valid")
}
