use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by matrix construction, boundary generators, the solver
/// and file I/O.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not symmetric: |a[{i}][{j}] - a[{j}][{i}]| = {delta:e} exceeds tolerance")]
    NotSymmetric { i: usize, j: usize, delta: f64 },

    #[error("invalid permutation: {0:?} is not a bijection of 0..n")]
    InvalidPermutation(Vec<usize>),

    #[error("negative entry at position {0}: {1}")]
    NegativeEntry(usize, f64),

    #[error("parameter {name} must be strictly positive, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },

    #[error("theta entries must sum to strictly less than pi, got {sum}")]
    ThetaSumOutOfRange { sum: f64 },

    #[error("factor support violates the banded W pattern at row {row}, column {col}")]
    SupportViolation { row: usize, col: usize },

    #[error("matrix is not close enough to the locus: residual {residual:e} exceeds gate {gate:e}")]
    NotNearLocus { residual: f64, gate: f64 },

    #[error("degenerate rationalization point: the cofactor of the solved diagonal entry vanishes")]
    DegenerateRationalization,

    #[error("monomial denominator vanishes; cannot solve for the dependent entry")]
    ZeroMonomialDenominator,

    #[error("chart singularity: dependent entry denominator vanishes")]
    ChartSingularity,

    #[error("degenerate chart point: Jacobian has numerical rank {rank}, expected 14")]
    DegenerateChartPoint { rank: usize },

    #[error("matrix is rank deficient; cannot solve")]
    RankDeficient,

    #[error("zero pattern is incompatible: row {row} is fully masked but the target diagonal is positive")]
    IncompatiblePattern { row: usize },

    #[error("rejection sampling exceeded {0} attempts")]
    RetryLimitExceeded(usize),

    #[error("cannot parse matrix: {0}")]
    Parse(String),

    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
