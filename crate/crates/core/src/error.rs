use thiserror::Error;

/// Errors raised by the lattice operators and the experiment harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("frequency coordinate {coord} outside box with cutoff {cutoff}")]
    OutOfBox { coord: i64, cutoff: u32 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("order mismatch at {context}: expected {expected}, got {got}")]
    OrderMismatch {
        context: String,
        expected: usize,
        got: usize,
    },

    #[error("invalid collision index (j={j}, k={k}) for a matrix of order {order}")]
    BadCollision { j: usize, k: usize, order: usize },

    #[error("{distinct} distinct sign variables exceed the exact-average capacity of {limit}; use montecarlo")]
    Capacity { distinct: usize, limit: usize },

    #[error("box has no admissible non-resonant key of order {order}")]
    NoAdmissibleKey { order: usize },

    #[error("missing a priori matrix of order {order}")]
    MissingOrder { order: usize },

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("usage: {0}")]
    Usage(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
