use std::io;

/// Errors raised by instance construction, search and file handling.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("degenerate instance: highest price is zero")]
    DegenerateInstance,

    #[error("assortment collection is empty")]
    EmptyCollection,

    #[error("set {set}: item {item} outside 1..={n}")]
    ItemOutOfRange { set: usize, item: u32, n: usize },

    #[error("set {set}: duplicate item {item}")]
    DuplicateItem { set: usize, item: u32 },

    #[error("set {set} is empty")]
    EmptySet { set: usize },

    #[error("collection is over {found} items but the instance has {expected}")]
    ItemCountMismatch { expected: usize, found: usize },

    #[error("vector norm {norm} exceeds scale {scale}")]
    Scaling { norm: f64, scale: f64 },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("tolerance {eps} must exceed 2(nu^2 + 2nu) = {floor}")]
    InfeasibleTolerance { eps: f64, floor: f64 },

    #[error("infeasible request: {0}")]
    Infeasible(String),

    #[error("brute force refused: n = {n} exceeds the limit of {limit} items")]
    TooLarge { n: usize, limit: usize },

    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },

    #[error("{path}: {msg}")]
    Schema { path: String, msg: String },

    #[error("no itemsets with cardinality in [{min}, {max}]")]
    EmptyAfterFilter { min: usize, max: usize },

    #[error("not an LSH index file")]
    IndexMagic,

    #[error("unsupported LSH index format version {0}")]
    IndexVersion(u32),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
