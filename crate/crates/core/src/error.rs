use thiserror::Error;

/// Errors reported by the solver library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("fractional order gamma = {0} must lie in (0, 1)")]
    GammaOutOfRange(f64),
    #[error("tempering parameter lambda = {0} must be non-negative")]
    NegativeTempering(f64),
    #[error("diffusion coefficient K = {0} must be positive")]
    NonpositiveDiffusion(f64),
    #[error("potential is negative (U = {value}) at x0 = {x}")]
    NegativePotential { x: f64, value: f64 },
    #[error("Re(p U) = {value} < 0 at x0 = {x}")]
    ReParameterNegative { x: f64, value: f64 },
    #[error("bad partition: {0}")]
    BadPartition(String),
    #[error("quadrature order {order} exceeds the supported maximum {max}")]
    OrderTooLarge { order: usize, max: usize },
    #[error("quadrature rule mismatch: {0}")]
    RuleMismatch(String),
    #[error("history holds {available} levels, level {requested} requested")]
    HistoryTooShort { available: usize, requested: usize },
    #[error("coefficient table covers k <= {available}, k = {requested} requested")]
    CoefficientTableTooShort { available: usize, requested: usize },
    #[error("zero pivot in tridiagonal factorization at row {0}")]
    SingularPivot(usize),
    #[error("singular matrix in dense elimination at column {0}")]
    SingularMatrix(usize),
    #[error("incompatible initial/boundary data: {0}")]
    IncompatibleData(String),
    #[error("missing data: {0}")]
    MissingData(String),
    #[error("transform evaluation failed at p = {p}: {reason}")]
    EvaluatorFailure { p: String, reason: String },
    #[error("inversion configuration overflow: {0}")]
    ConfigOverflow(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("adaptive quadrature did not reach tolerance {tol:e} (estimate {estimate:e})")]
    ToleranceNotMet { tol: f64, estimate: f64 },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
