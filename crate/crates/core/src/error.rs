use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("invalid tree shape: {0}")]
    InvalidShape(String),
    #[error("vertex {0:?} is not part of the tree")]
    AddressOutOfRange(String),
    #[error("vertex {vertex:?} has color {color} outside 0..{q}")]
    ColorOutOfRange {
        vertex: String,
        color: usize,
        q: usize,
    },
    #[error("cannot parse vertex address {0:?}")]
    ParseAddress(String),
    #[error("vertex {0:?} is assigned twice")]
    DuplicateAddress(String),
    #[error("the two boundary assignments are defined on different vertex sets")]
    KeySetMismatch,
    #[error("disagreements at distance {distance} from the root; at least 3 is required")]
    DisagreementTooClose { distance: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BpError {
    #[error("every color is excluded at the parent (zero normalising denominator)")]
    ZeroDenominator,
    #[error("boundary is not extendible (conflict at vertex {0:?})")]
    NonExtendible(String),
    #[error("the root is frozen by the boundary")]
    FrozenRoot,
    #[error("z[{child}][{color}] = 1; the derivative is undefined for a frozen-child column")]
    DivisionByOne { child: usize, color: usize },
    #[error("child marginal lists differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("distribution has {found} entries, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("interpolation parameter t = {0} is outside [0, 1]")]
    InvalidT(f64),
    #[error("not a probability vector: {0}")]
    InvalidDistribution(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("boundary is not extendible")]
    NonExtendible,
    #[error("the root is frozen by the boundary")]
    FrozenRoot,
    #[error("instance needs more than {budget} dynamic-programming states")]
    BudgetExceeded { budget: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NormError {
    #[error("power iteration did not converge within {iterations} iterations")]
    NonConvergence { iterations: usize },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("vector lengths differ ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("domain error: {0}")]
    Domain(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ThresholdError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("no sign change of the threshold condition on ({lo}, {hi})")]
    BracketFailure { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExperimentError {
    #[error("no extendible pair after {attempts} attempts (acceptance rate {acceptance_rate})")]
    GenerationFailure {
        attempts: usize,
        acceptance_rate: f64,
    },
    #[error("precondition violated: {0}")]
    Precondition(String),
}

/// Umbrella error for operations that cross module boundaries.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Bp(#[from] BpError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Norm(#[from] NormError),
    #[error(transparent)]
    Threshold(#[from] ThresholdError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
