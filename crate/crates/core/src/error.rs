use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty point set")]
    EmptyPointSet,

    #[error("point set of size {n} exceeds the exact-discrepancy cap {cap}")]
    OverCap { n: usize, cap: usize },

    #[error("parameter range: {0}")]
    ParameterRange(String),

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Pairwise distances are not those of a scaled collinear set.
    #[error("distance precondition violated at pair ({s}, {t}): expected {expected}, found {found}")]
    NotCollinearCopy {
        s: f64,
        t: f64,
        expected: f64,
        found: f64,
    },

    /// A step that a proof guarantees to succeed did not.
    #[error("internal invariant failed: {0}")]
    Invariant(String),
}
