use thiserror::Error;

/// Errors raised while constructing or combining measurement objects.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix has a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix dimension must be positive")]
    EmptyMatrix,

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("not an effect: spectrum [{min_eigenvalue}, {max_eigenvalue}] leaves [0, 1]")]
    NotEffect {
        min_eigenvalue: f64,
        max_eigenvalue: f64,
    },

    #[error("trace {trace} out of range for a {kind}")]
    TraceOutOfRange { kind: &'static str, trace: f64 },

    #[error("cannot normalize a partial state with trace {trace:e}")]
    ZeroTrace { trace: f64 },

    #[error("outcome has zero probability (trace {trace:e})")]
    ZeroProbability { trace: f64 },

    #[error("effects are not perpendicular (largest eigenvalue of the sum {max_eigenvalue})")]
    NotPerpendicular { max_eigenvalue: f64 },

    #[error("outcome space is empty")]
    EmptyOutcomeSpace,

    #[error("duplicate outcome label {0:?}")]
    DuplicateLabel(String),

    #[error("unknown outcome label {0:?}")]
    UnknownLabel(String),

    #[error("label {0:?} already present in the outcome space")]
    LabelCollision(String),

    #[error("outcome spaces differ")]
    OutcomeSpaceMismatch,

    #[error("expected {expected} entries for the outcome space, found {found}")]
    ArityMismatch { expected: usize, found: usize },

    #[error("effects do not sum to the identity (max deviation {deviation:e})")]
    NotObservable { deviation: f64 },

    #[error("sum leaves the sub-observables (largest eigenvalue {max_eigenvalue})")]
    SumEscapesSob { max_eigenvalue: f64 },

    #[error("scale factor {0} outside [0, 1]")]
    ScaleOutOfRange(f64),

    #[error("operation has no Kraus operators")]
    EmptyKraus,

    #[error("operation increases trace (largest eigenvalue of the Kraus sum {max_eigenvalue})")]
    TraceIncreasing { max_eigenvalue: f64 },

    #[error("Kraus sum differs from the identity by {deviation:e}; not a channel")]
    NotChannel { deviation: f64 },

    #[error("instrument does not measure the required observable (residual {residual:e})")]
    MeasuredObservableMismatch { residual: f64 },

    #[error("tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),

    #[error("Jacobi iteration did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unknown {kind} {name:?}")]
    UnknownName { kind: &'static str, name: String },
}

pub type Result<T> = std::result::Result<T, Error>;
