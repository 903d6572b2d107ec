use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// An enumeration would materialize more elements than allowed.
    #[error("{what}: {count} elements exceeds the enumeration limit {limit}")]
    GuardExceeded {
        what: &'static str,
        count: u128,
        limit: u128,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("resolution mismatch: point set has k={found}, expected k={expected}")]
    ResolutionMismatch { expected: u32, found: u32 },

    #[error("box class is infeasible")]
    InfeasibleClass,

    #[error("box volume {0} does not exceed the class threshold 2^-k")]
    NotInOmega(String),

    #[error("no certified point set after {attempts} attempts")]
    AttemptsExhausted {
        attempts: u64,
        /// Failure witness of the attempt that got furthest through the certificate.
        witness: Option<crate::partition::BoxClass>,
    },

    #[error("search cap exceeded: no n <= {cap} reached the target rate")]
    SearchCap { cap: u64 },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
