use thiserror::Error;

/// Everything that can go wrong in this crate.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{0} is not a prime")]
    NotPrime(u64),

    #[error("precision must be at least 1")]
    ZeroPrecision,

    #[error("zero polynomial")]
    ZeroPolynomial,

    #[error("root outside Q_p: {0}")]
    RequiresExtension(String),

    #[error("insufficient p-adic precision: {0}")]
    InsufficientPrecision(String),

    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("invalid map: {0}")]
    InvalidMap(String),

    #[error("preimage multiplicities sum to {found}, expected degree {expected}")]
    MultiplicityMismatch { found: u64, expected: u64 },

    #[error("inconsistent surplus counts across targets: {0:?}")]
    InconsistentSurplus(Vec<u64>),

    #[error("atom budget exceeded: need up to {needed} atoms, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u64 },

    #[error("integrand is infinite at {0}")]
    SingularIntegrand(String),

    #[error("internal consistency check failed: {0}")]
    ConsistencyFailure(String),

    #[error("trees do not match")]
    TreeMismatch,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
