use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid support: index {index} out of range for p = {p}")]
    InvalidSupport { index: usize, p: usize },

    #[error("invalid k = {k} for a problem with p = {p} predictors")]
    InvalidK { k: usize, p: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("exhaustive search refused: C({p},{k}) = {count} subsets exceeds the limit of {limit}")]
    TooManySubsets { p: usize, k: usize, count: u128, limit: u128 },

    #[error("column `{name}` (index {index}) is constant and cannot be standardized")]
    ConstantColumn { index: usize, name: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("data generation failed: {0}")]
    Generation(String),

    #[error("row {row}, column {column} (`{name}`): cannot parse `{value}` as a number")]
    Parse { row: usize, column: usize, name: String, value: String },

    #[error("row {row}: expected {expected} fields, found {found}")]
    Ragged { row: usize, expected: usize, found: usize },

    #[error("corrupt dataset file: {0}")]
    Corrupt(String),

    #[error("unsupported dataset format version {0}")]
    Version(u32),

    #[error("inconsistent objective values: f_tilde = {f_tilde} lies below f_star = {f_star}")]
    Inconsistent { f_tilde: f64, f_star: f64 },

    #[error("missing data: {0}")]
    MissingData(String),

    #[error("plan error: {0}")]
    Plan(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True when the error stems from bad parameters rather than a runtime failure.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidK { .. }
                | Error::InvalidArgument(_)
                | Error::InvalidConfig(_)
                | Error::InvalidSupport { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
