use thiserror::Error;

use crate::field::ScalarField;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("grid has no cells")]
    EmptyGrid,

    #[error("grid is disconnected: {count} components with sizes {sizes:?}, first cells {representatives:?}")]
    Disconnected {
        count: usize,
        sizes: Vec<usize>,
        representatives: Vec<Vec<i64>>,
    },

    #[error("cell index {index} out of range for a grid of {len} cells")]
    CellOutOfRange { index: usize, len: usize },

    #[error("field has {got} values but the grid has {expected} cells")]
    FieldLength { expected: usize, got: usize },

    #[error("field value at cell {cell} is not finite")]
    NonFinite { cell: usize },

    #[error("field is identically zero")]
    ZeroField,

    #[error("field is negative at cell {cell} ({value})")]
    NegativeValue { cell: usize, value: f64 },

    #[error("invalid exponent p = {0}; need 1 < p < inf")]
    InvalidExponent(f64),

    #[error("relative distance needs an interval with lo > 0, got [{lo}, {hi}]")]
    NonPositiveInterval { lo: f64, hi: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("supports of members {first} and {second} overlap at cell {cell}")]
    OverlappingSupports {
        first: usize,
        second: usize,
        cell: usize,
    },

    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        last: Box<ScalarField>,
    },

    #[error("matrix is not positive definite at pivot {0}")]
    NotPositiveDefinite(usize),

    #[error("requested {requested} eigenpairs but the grid has only {cells} cells")]
    TooManyEigenpairs { requested: usize, cells: usize },

    #[error("balanced interval {interval} has only {heavy} heavy subintervals (need {needed})")]
    UnbalancedInterval {
        interval: i32,
        heavy: usize,
        needed: usize,
    },

    #[error("decomposition is vacuous: {0}")]
    Vacuous(String),

    #[error("brute force budget of {budget} exceeded; reduce the resolution")]
    BudgetExceeded { budget: u64 },

    #[error("malformed input at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}
