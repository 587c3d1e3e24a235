use thiserror::Error;

/// Errors raised across the relaxation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("monomial of length {0} exceeds the supported order 4")]
    UnsupportedOrder(usize),

    #[error("mode index {mode} out of range for {n_modes} modes")]
    ModeOutOfRange { mode: usize, n_modes: usize },

    #[error("invalid system size {0}")]
    InvalidSize(usize),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("term `{0}` is not representable in the moment layout")]
    UnsupportedTerm(String),

    #[error("unsupported scope: {0}")]
    UnsupportedScope(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("Dykstra iteration did not converge after {sweeps} sweeps (statistic {statistic:e})")]
    DykstraNotConverged { sweeps: usize, statistic: f64 },

    #[error("solve interrupted after {} iterations: {source}", trace.len())]
    SolveInterrupted {
        source: Box<Error>,
        trace: Vec<crate::solver::TraceRow>,
    },

    #[error("reports belong to different problem instances")]
    MismatchedInstances,

    #[error("state dimension {got} does not match 2^{n_modes}")]
    DimensionMismatch { n_modes: usize, got: usize },

    #[error("exact diagonalization limited to {limit} modes, got {n_modes}")]
    DimensionLimit { n_modes: usize, limit: usize },

    #[error("translation-invariant structure violated: {0}")]
    TiStructure(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
