use thiserror::Error;

/// Errors raised by the state algebra, duplexer, renderer and tomography.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("superposition has no terms")]
    EmptyState,
    #[error("superposition has zero norm")]
    ZeroNorm,
    #[error("OAM index {0} appears more than once")]
    DuplicateIndex(i64),
    #[error("Hilbert hotel multiplier must be >= 1, got {0}")]
    InvalidMultiplier(i64),
    #[error("OAM index overflow while mapping {ell} by {factor}")]
    IndexOverflow { ell: i64, factor: i64 },
    #[error("basis mismatch: {0}")]
    BasisMismatch(String),
    #[error("invalid basis: {0}")]
    InvalidBasis(String),
    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),
    #[error("mixture weight {0} is negative")]
    NegativeWeight(f64),
    #[error("invalid source weights: {0}")]
    WeightError(String),
    #[error("invalid imperfection model: {0}")]
    InvalidImperfection(String),
    #[error("bright port carries no power")]
    BrightPortEmpty,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("radius band ({0}, {1}) is empty or outside the grid")]
    EmptyBand(f64, f64),
    #[error("malformed PGM image: {0}")]
    MalformedImage(String),
    #[error("tomography basis needs at least 2 modes, got {0}")]
    BasisTooSmall(usize),
    #[error("exposure must be positive and finite, got {0}")]
    InvalidExposure(f64),
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("measurement record set is missing {0}")]
    IncompleteSet(String),
    #[error("record has zero exposure")]
    ZeroExposure,
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
