//! Best subset selection: solvers, synthetic data, benchmarking, and metrics.
//!
//! The problem is to minimize `||y - X beta||²` subject to at most `k`
//! nonzero coefficients. [`selectors`] provides forward selection, floating
//! search, feature swapping, a discrete first-order method, a genetic
//! algorithm, and an exhaustive oracle over a shared least-squares kernel in
//! [`linalg`].

pub mod cpu;
pub mod dataio;
pub mod datagen;
pub mod dataset;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod selectors;

pub use dataset::{Dataset, SubsetSolution, SupportSet};
pub use error::{Error, Result};
pub use selectors::{solve, Budget, RunDiagnostics, RunOutcome, SolverConfig, SolverKind, StopReason};
