use thiserror::Error;

/// Errors raised anywhere in the enumeration / analysis / sampling pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolyaError {
    #[error("degree set must contain 0")]
    MissingZero,

    #[error("degree set must contain an integer >= 2")]
    NoBranchingDegree,

    #[error("malformed degree set: {0}")]
    MalformedTail(String),

    #[error("power-sum table covers indices 1..={available}, but index {requested} is required")]
    TruncationTooShort { requested: usize, available: usize },

    #[error("cycle index sum diverges: {0}")]
    Divergent(String),

    #[error("brute-force enumeration is limited to n <= {limit} (requested {requested})")]
    SizeGuardExceeded { requested: usize, limit: usize },

    #[error("argument {x} is too close to the singularity to be resolved from {coefficients} coefficients")]
    TooCloseToSingularity { x: f64, coefficients: usize },

    #[error("singularity solve did not converge after {iterations} iterations (residual {residual:e}, z = {z}, w = {w})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        z: f64,
        w: f64,
    },

    #[error("could not bracket the singularity: {0}")]
    BracketFailure(String),

    #[error("sigma^2 routes disagree: formula {formula} vs pmf variance {pmf}")]
    InconsistentSigma { formula: f64, pmf: f64 },

    #[error("no cycle-type table prepared for exponent {0}")]
    TableMissing(u64),

    #[error("no tree of size {0} has all outdegrees in the degree set")]
    InadmissibleSize(usize),

    #[error("sampler gave up after {attempts} attempts")]
    AttemptsExhausted { attempts: u64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, PolyaError>;
