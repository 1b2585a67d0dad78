use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid symbol {0} in cell address (expected 1, 2 or 3)")]
    InvalidSymbol(u8),

    #[error("invalid corner index {0} (expected 1, 2 or 3)")]
    InvalidCorner(u8),

    #[error("scale {scale} exceeds level {level}")]
    ScaleTooLarge { scale: usize, level: usize },

    #[error("level {requested} is not available (built up to {available})")]
    LevelUnavailable { requested: usize, available: usize },

    #[error("level must be at least {min}, got {got}")]
    LevelTooSmall { min: usize, got: usize },

    #[error("vertex {0} does not belong to the requested level")]
    UnknownVertex(String),

    #[error("decimation discriminant is negative for gamma = {0}")]
    NegativeDiscriminant(f64),

    #[error("gamma = {0} is a forbidden value for eigenfunction extension")]
    ForbiddenEigenvalue(f64),

    #[error("renormalized eigenvalue did not converge by k = {k_max} (fixation {fixation})")]
    NonConvergence { k_max: usize, fixation: usize },

    #[error("eigenvalue {gamma} expected with multiplicity {expected}, dense solve found {found}")]
    MultiplicityMismatch {
        gamma: f64,
        expected: usize,
        found: usize,
    },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("exponent must be positive, got {0}")]
    NonPositiveExponent(f64),

    #[error("function is not positive (minimum {0})")]
    NonPositiveFunction(f64),

    #[error("functional is undefined at {0}")]
    FunctionalUndefined(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty range")]
    EmptyRange,

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
