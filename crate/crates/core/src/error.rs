use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("blocks overlap: index {0} appears in more than one block")]
    OverlappingBlocks(usize),
    #[error("index {0} is not covered by any block")]
    UncoveredIndex(usize),
    #[error("block {0} is empty")]
    EmptyBlock(usize),
    #[error("index {index} is out of range 1..={count}")]
    IndexOutOfRange { index: usize, count: usize },
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("matrix is not symmetric: |a[{row}][{col}] - a[{col}][{row}]| = {diff:e}")]
    NotSymmetric { row: usize, col: usize, diff: f64 },
    #[error("matrix is not positive semidefinite: minimum eigenvalue {min_eigenvalue:e} < -{tolerance:e}")]
    NotPsd { min_eigenvalue: f64, tolerance: f64 },
    #[error("invalid Levy measure: {0}")]
    InvalidMeasure(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),
    #[error("invalid covariance function: {0}")]
    InvalidCovFunction(String),
    #[error("finite-difference rectangle around ({s}, {t}) with step {h} leaves the off-diagonal region")]
    StepTooLarge { s: f64, t: f64, h: f64 },
    #[error("enumeration budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("limit theorem hypothesis not certified: {0}")]
    HypothesisNotCertified(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
