use thiserror::Error;

/// Errors raised by the numerical toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operation requires a strictly convex smooth domain, got {0}")]
    NonSmoothDomain(String),

    #[error("exponent alpha = {alpha} outside the admissible range {range}")]
    AlphaOutOfRange { alpha: f64, range: String },

    #[error("symbol is singular at xi = 0")]
    SingularSymbol,

    #[error("level mu = {mu} outside the two-root regime (requires mu < {limit})")]
    RootRegime { mu: f64, limit: f64 },

    #[error("root finder failed: {0}")]
    RootFinding(String),

    #[error("quadrature did not converge: estimated error {estimate:e} above tolerance {tolerance:e}")]
    Quadrature { estimate: f64, tolerance: f64 },

    #[error("extrapolation did not converge: error estimate {estimate:e} above tolerance {tolerance:e}")]
    Extrapolation { estimate: f64, tolerance: f64 },

    #[error("eigensolver did not converge")]
    EigenSolver,

    #[error("mesh is empty: domain too thin for the requested grid")]
    EmptyMesh,

    #[error("enumeration limit exceeded: {0}")]
    EnumerationLimit(String),

    #[error("value {value} beyond enumeration cap {cap}")]
    BeyondCap { value: f64, cap: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
