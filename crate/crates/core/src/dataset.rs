//! Core problem and solution types.

use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Tolerance used when checking the standardization invariants.
pub const STANDARDIZATION_TOL: f64 = 1e-10;

/// A regression problem: design matrix `x` (n × p) and response `y` (length n).
///
/// `x` is stored column-major, so every predictor column is a contiguous slice.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    x: DMatrix<f64>,
    y: Vec<f64>,
    column_names: Vec<String>,
    standardized: bool,
}

impl Dataset {
    /// Wraps `x` and `y` without modifying them. Columns get default names `x1..xp`.
    pub fn new(name: impl Into<String>, x: DMatrix<f64>, y: Vec<f64>) -> Result<Self> {
        let (n, p) = x.shape();
        if n == 0 || p == 0 {
            return Err(Error::Shape(format!("design matrix must be non-empty, got {n}x{p}")));
        }
        if y.len() != n {
            return Err(Error::Shape(format!("response has {} entries, expected {n}", y.len())));
        }
        let column_names = (1..=p).map(|j| format!("x{j}")).collect();
        Ok(Self { name: name.into(), x, y, column_names, standardized: false })
    }

    pub fn with_column_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.p() {
            return Err(Error::Shape(format!(
                "{} column names for {} columns",
                names.len(),
                self.p()
            )));
        }
        self.column_names = names;
        Ok(self)
    }

    /// Centers every column and scales it to unit l2-norm.
    pub fn standardize(mut self) -> Result<Self> {
        standardize_columns(&mut self.x, &self.column_names)?;
        self.standardized = true;
        Ok(self)
    }

    /// Centers `y` and scales it to unit l2-norm.
    pub fn standardize_response(mut self) -> Result<Self> {
        if !standardize_slice(&mut self.y) {
            return Err(Error::ConstantColumn { index: self.p(), name: "response".into() });
        }
        Ok(self)
    }

    /// Marks the dataset as standardized after verifying the invariants.
    pub(crate) fn assume_standardized(mut self, flag: bool) -> Result<Self> {
        if flag && !columns_are_standardized(&self.x, STANDARDIZATION_TOL) {
            return Err(Error::Corrupt("dataset flagged standardized but columns are not".into()));
        }
        self.standardized = flag;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn column(&self, j: usize) -> &[f64] {
        let n = self.n();
        &self.x.as_slice()[j * n..(j + 1) * n]
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn is_standardized(&self) -> bool {
        self.standardized
    }

    pub fn y_norm_sq(&self) -> f64 {
        dot(&self.y, &self.y)
    }
}

/// Centers and unit-normalizes each column in place.
pub fn standardize_columns(x: &mut DMatrix<f64>, names: &[String]) -> Result<()> {
    let n = x.nrows();
    for (j, col) in x.as_mut_slice().chunks_mut(n).enumerate() {
        if !standardize_slice(col) {
            let name = names.get(j).cloned().unwrap_or_else(|| format!("x{}", j + 1));
            return Err(Error::ConstantColumn { index: j, name });
        }
    }
    Ok(())
}

/// Returns false when the vector is constant (nothing left after centering).
fn standardize_slice(v: &mut [f64]) -> bool {
    let scale = v.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    for _ in 0..2 {
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        v.iter_mut().for_each(|a| *a -= mean);
    }
    let norm = dot(v, v).sqrt();
    if !(norm > 1e-12 * scale.max(f64::MIN_POSITIVE)) || !norm.is_finite() {
        return false;
    }
    v.iter_mut().for_each(|a| *a /= norm);
    true
}

/// Checks the zero-mean / unit-norm invariants on every column.
pub fn columns_are_standardized(x: &DMatrix<f64>, tol: f64) -> bool {
    let n = x.nrows();
    x.as_slice().chunks(n).all(|col| {
        let mean = col.iter().sum::<f64>() / n as f64;
        mean.abs() <= tol && (dot(col, col).sqrt() - 1.0).abs() <= tol
    })
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Sorted set of distinct zero-based predictor indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SupportSet(Vec<usize>);

impl SupportSet {
    /// Builds a set from arbitrary indices, sorting and removing duplicates.
    pub fn new(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        Self(indices)
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn full(p: usize) -> Self {
        Self((0..p).collect())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.0.binary_search(&j).is_ok()
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        match self.0.last() {
            Some(&index) if index >= p => Err(Error::InvalidSupport { index, p }),
            _ => Ok(()),
        }
    }

    pub fn is_subset_of(&self, other: &SupportSet) -> bool {
        self.0.iter().all(|&j| other.contains(j))
    }

    pub fn is_disjoint(&self, other: &SupportSet) -> bool {
        self.0.iter().all(|&j| !other.contains(j))
    }

    pub fn union(&self, other: &SupportSet) -> SupportSet {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        SupportSet::new(v)
    }

    pub fn difference(&self, other: &SupportSet) -> SupportSet {
        SupportSet(self.0.iter().copied().filter(|&j| !other.contains(j)).collect())
    }

    pub fn with(&self, j: usize) -> SupportSet {
        self.union(&SupportSet(vec![j]))
    }

    pub fn without(&self, j: usize) -> SupportSet {
        SupportSet(self.0.iter().copied().filter(|&i| i != j).collect())
    }

    /// Semicolon-joined one-based indices, as used in result files.
    pub fn to_one_based_string(&self) -> String {
        self.0.iter().map(|j| (j + 1).to_string()).collect::<Vec<_>>().join(";")
    }

    pub fn parse_one_based(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Self::empty());
        }
        let mut out = Vec::new();
        for tok in s.split(';') {
            let v: usize = tok
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad support index `{tok}`")))?;
            if v == 0 {
                return Err(Error::InvalidArgument("support indices are one-based".into()));
            }
            out.push(v - 1);
        }
        Ok(Self::new(out))
    }
}

impl From<&[usize]> for SupportSet {
    fn from(v: &[usize]) -> Self {
        SupportSet::new(v.to_vec())
    }
}

impl fmt::Display for SupportSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.to_one_based_string().replace(';', ", "))
    }
}

/// A least-squares fit restricted to a support.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetSolution {
    pub support: SupportSet,
    /// Coefficients in the order of `support.indices()`.
    pub beta: Vec<f64>,
    pub rss: f64,
}

impl SubsetSolution {
    /// Expands the coefficients into a length-`p` vector.
    pub fn dense_beta(&self, p: usize) -> Vec<f64> {
        let mut out = vec![0.0; p];
        for (&j, &b) in self.support.indices().iter().zip(&self.beta) {
            out[j] = b;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standardization_invariants() {
        let x = DMatrix::from_column_slice(4, 2, &[1.0, 2.0, 3.0, 10.0, -5.0, 0.5, 0.25, 8.0]);
        let d = Dataset::new("t", x, vec![0.0; 4]).unwrap().standardize().unwrap();
        assert!(d.is_standardized());
        assert!(columns_are_standardized(d.x(), 1e-12));
    }

    #[test]
    fn standardization_is_idempotent() {
        let x = DMatrix::from_fn(7, 3, |i, j| ((i * 3 + j * 7) % 5) as f64 + 0.1 * j as f64);
        let once = Dataset::new("t", x, vec![0.0; 7]).unwrap().standardize().unwrap();
        let twice = once.clone().standardize().unwrap();
        for (a, b) in once.x().iter().zip(twice.x().iter()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn constant_column_is_rejected() {
        let x = DMatrix::from_column_slice(3, 2, &[1.0, 2.0, 4.0, 3.0, 3.0, 3.0]);
        let err = Dataset::new("t", x, vec![0.0; 3])
            .unwrap()
            .with_column_names(vec!["a".into(), "flat".into()])
            .unwrap()
            .standardize()
            .unwrap_err();
        match err {
            Error::ConstantColumn { index, name } => {
                assert_eq!(index, 1);
                assert_eq!(name, "flat");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn shape_errors() {
        assert!(Dataset::new("t", DMatrix::zeros(3, 2), vec![0.0; 2]).is_err());
        assert!(Dataset::new("t", DMatrix::zeros(0, 2), vec![]).is_err());
    }

    #[test]
    fn support_set_normalizes_and_formats() {
        let s = SupportSet::new(vec![4, 1, 4, 0]);
        assert_eq!(s.indices(), &[0, 1, 4]);
        assert_eq!(s.to_one_based_string(), "1;2;5");
        assert_eq!(SupportSet::parse_one_based("1;2;5").unwrap(), s);
        assert!(SupportSet::parse_one_based("0;1").is_err());
        assert!(s.validate(5).is_ok());
        assert!(matches!(s.validate(4), Err(Error::InvalidSupport { index: 4, p: 4 })));
        assert_eq!(s.difference(&SupportSet::new(vec![1])).indices(), &[0, 4]);
        assert!(s.is_disjoint(&SupportSet::new(vec![2, 3])));
        assert_eq!(format!("{s}"), "{1, 2, 5}");
    }
}
