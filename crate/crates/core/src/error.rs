use thiserror::Error;

/// Errors produced while building, querying or decoding range filters.
#[derive(Debug, Error)]
pub enum Error {
    #[error("key set is empty")]
    EmptyKeys,
    #[error("false-positive probability must lie in (0, 1), got {0}")]
    InvalidEpsilon(f64),
    #[error("maximum range size must be at least 1")]
    InvalidRangeSize,
    #[error("bits-per-key budget {0} is not admissible")]
    InvalidBudget(f64),
    #[error("bucket width {0} must be a power of two in [1, 2^64]")]
    InvalidBucketWidth(u128),
    #[error("universe size {0} must lie in [1, 2^64]")]
    InvalidUniverse(u128),
    #[error("reduced universe {0} must lie in [1, 2^64]")]
    InvalidReducedUniverse(u128),
    #[error("{0} is not prime")]
    NotPrime(u128),
    #[error("prime {p} must exceed the reduced universe {r}")]
    PrimeTooSmall { p: u128, r: u128 },
    #[error("hash coefficients out of range: c1={c1}, c2={c2}, p={p}")]
    InvalidCoefficients { p: u128, c1: u128, c2: u128 },
    #[error("invalid query range [{a}, {b}]")]
    InvalidRange { a: u64, b: u64 },
    #[error("value {value} is outside the universe [0, {universe})")]
    OutOfUniverse { value: u64, universe: u128 },
    #[error("input is not strictly increasing at position {0}")]
    Unsorted(usize),
    #[error("index {index} is out of range (valid: {valid})")]
    IndexOutOfRange { index: usize, valid: String },
    #[error("bad magic bytes, expected {0:?}")]
    BadMagic(&'static str),
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),
    #[error("input ended unexpectedly")]
    Truncated,
    #[error("corrupt encoding: {0}")]
    Corrupt(&'static str),
    #[error("collected only {collected} of {wanted} empty queries after {attempts} draws")]
    RetryCapExceeded {
        wanted: usize,
        collected: usize,
        attempts: usize,
    },
    #[error("invalid workload: {0}")]
    InvalidWorkload(String),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("invalid benchmark configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
