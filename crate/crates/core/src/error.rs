use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("vector length {0} is not a perfect square")]
    NotPerfectSquare(usize),

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("eigendecomposition failed: {0}")]
    EigenFailure(String),

    #[error("singular value decomposition failed: {0}")]
    SvdFailure(String),

    #[error("defective peripheral eigenvalue {lambda}: cluster Gram matrix is singular (smallest singular value {sigma_min:e})")]
    DefectiveEigenvalue { lambda: Complex64, sigma_min: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("not in peripheral span: reconstruction defect {defect:e} exceeds {allowed:e}")]
    NotInPeripheralSpan { defect: f64, allowed: f64 },

    #[error("tolerance conflict: {value} lies within tolerance of several spectral clusters ({first}, {second})")]
    ToleranceConflict {
        value: Complex64,
        first: Complex64,
        second: Complex64,
    },

    #[error("ambient dimension {required} exceeds the configured cap {allowed}")]
    CapExceeded { required: usize, allowed: usize },

    #[error("n_max exhausted: no almost period up to {n_max}; best n = {best_n} with defect {best_defect:e}")]
    AlmostPeriodExhausted {
        n_max: u64,
        best_n: u64,
        best_defect: f64,
    },

    #[error("level {level} out of range 0..={depth}")]
    LevelOutOfRange { level: usize, depth: usize },

    #[error("invalid probabilities: {0}")]
    InvalidProbabilities(String),

    #[error("matrix is not unitary: defect {0:e}")]
    NotUnitary(f64),

    #[error("invalid group table: {0}")]
    InvalidGroup(String),

    #[error("truncation {truncation} is too small for symbol support {support}")]
    TruncationTooSmall { truncation: usize, support: usize },
}
