use thiserror::Error;

/// Errors shared by every module in the crate.
///
/// Domain errors (guard refusals, class violations, infeasibility) are kept
/// distinct from usage errors so the CLI can map them to different exit codes.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum Error {
    #[error("matrix must be square and non-empty: {0}")]
    MalformedMatrix(String),

    #[error("could not parse matrix text: {0}")]
    Parse(String),

    #[error("{op} refuses order n = {n} (guard limit {max})")]
    OrderGuard { op: &'static str, n: usize, max: usize },

    #[error("malformed permutation: {0}")]
    MalformedPermutation(String),

    #[error("precondition violated for {op}: {detail}")]
    Precondition { op: &'static str, detail: String },

    #[error("row {row} has no feasible column to absorb its diagonal mass")]
    Infeasible { row: usize },

    #[error("argument out of range for {op}: {detail}")]
    OutOfRange { op: &'static str, detail: String },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("unknown permanent strategy '{0}'")]
    UnknownStrategy(String),
}

pub type Result<T> = std::result::Result<T, Error>;
