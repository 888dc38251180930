use thiserror::Error;

/// Errors raised by the districting model and solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid district: {0}")]
    InvalidDistrict(String),

    #[error("plan is infeasible: max type-mass deviation {deviation:e} exceeds {tolerance:e}")]
    InfeasiblePlan { deviation: f64, tolerance: f64 },

    #[error("threshold bisection did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("linear program is infeasible (phase-one residual {0:e})")]
    LpInfeasible(f64),

    #[error("linear program is unbounded in column {0}")]
    LpUnbounded(usize),

    #[error("simplex iteration limit {0} exceeded")]
    IterationLimit(usize),

    #[error("basis matrix became singular during refactorization")]
    SingularBasis,

    #[error("estimation needs at least two elections, got {0}")]
    TooFewElections(usize),

    #[error("between-election variance is zero; gamma estimate is infinite")]
    ZeroVariance,

    #[error("no data left after filtering")]
    NoData,

    #[error("vote share {0} is outside (0, 1)")]
    ShareOutOfRange(f64),

    #[error("gamma must be positive and != 1 for this computation, got {0}")]
    DegenerateGamma(f64),

    #[error("malformed input at line {line}: {message}")]
    Malformed { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
