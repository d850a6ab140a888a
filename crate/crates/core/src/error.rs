use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension {0} outside supported range 4..=8")]
    Dimension(usize),
    #[error("walk must take at least one step")]
    EmptyWalk,
    #[error("segment [{a}, {b}] is not valid for a path of {n} steps")]
    Segment { a: usize, b: usize, n: usize },
    #[error("segment [{0}, {0}] has no edges")]
    EmptySegment(usize),
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("degenerate split: need 0 < {split} < {end} <= {n}")]
    Split { split: usize, end: usize, n: usize },
    #[error("length {n} is not divisible by 2^{levels}")]
    NotDyadic { n: usize, levels: u32 },
    #[error("conjugate gradient stopped after {iterations} iterations with relative residual {residual:e}")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("dense solve is limited to {limit} vertices, graph has {size}")]
    TooLarge { size: usize, limit: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("samples have zero variance")]
    ZeroVariance,
    #[error("point set is empty")]
    EmptySet,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
