use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("state is not normalizable (norm {norm:.3e})")]
    NotNormalizable { norm: f64 },
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("invalid slicing axis {axis} for {subsystems} subsystems")]
    InvalidAxis { axis: usize, subsystems: usize },
    #[error("need at least {required} subsystems, got {got}")]
    TooFewSubsystems { required: usize, got: usize },
    #[error("no diagonalizing unitary pair found (max off-diagonal {max_offdiag:.3e})")]
    NoPairFound { max_offdiag: f64 },
    #[error("rotated slices are not diagonal (max off-diagonal {max_offdiag:.3e})")]
    SlicesNotDiagonal { max_offdiag: f64 },
    #[error("rank {rank} exceeds smallest dimension {max}")]
    RankTooLarge { rank: usize, max: usize },
    #[error("Schmidt coefficients differ: {left:?} vs {right:?}")]
    CoefficientsMismatch { left: Vec<f64>, right: Vec<f64> },
    #[error("state is not Schmidt decomposable")]
    NotDecomposable,
    #[error("{n} subsystems exceeds the exact-solver limit of {max}")]
    TooManySubsystems { n: usize, max: usize },
    #[error("dimension product overflows")]
    ProductOverflow,
    #[error("subset-sum reduction would overflow ({bits} bits)")]
    OverflowRisk { bits: u64 },
    #[error("grouping mismatch: {0}")]
    GroupingMismatch(String),
    #[error("invalid arguments: {0}")]
    InvalidArgs(String),
    #[error("linear combination vanishes (norm {norm:.3e})")]
    DegenerateCombination { norm: f64 },
    #[error("reference dimension {given} is smaller than rank {rank}")]
    ReferenceTooSmall { given: usize, rank: usize },
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),
    #[error("purifications describe different states (deviation {deviation:.3e})")]
    DifferentStates { deviation: f64 },
    #[error("malformed cut: {0}")]
    MalformedCut(String),
    #[error("indices out of range: {0}")]
    IndicesOutOfRange(String),
    #[error("format error: {0}")]
    Format(String),
}
