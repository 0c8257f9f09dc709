use thiserror::Error;

use crate::instance::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid instance: {}", join_violations(.0))]
    InvalidInstance(Vec<Violation>),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("negative coordinate {value} at index {index}")]
    NegativeCoordinate { index: usize, value: f64 },

    #[error("exact computation refused: {branching} probabilistic edges exceed the limit of {limit}")]
    ExactTooLarge { branching: usize, limit: usize },

    #[error("brute force refused: {pairs} candidate pairs exceed the limit of {limit}")]
    BruteForceTooLarge { pairs: u128, limit: u128 },

    #[error("budget {budget} exceeds ground set of size {ground}")]
    BudgetExceedsGround { budget: usize, ground: usize },

    #[error("matrix rank {rank} exceeds the configured maximum {max}")]
    RankTooHigh { rank: usize, max: usize },

    #[error(
        "net too large: {} points against a cap of {cap} (size bound C(m,r)*|grid|^r = {bound}); increase epsilon",
        count.map_or_else(|| "unbuilt".to_string(), |c| c.to_string())
    )]
    NetTooLarge { count: Option<usize>, cap: usize, bound: u128 },

    #[error("oracle failure: {0}")]
    Oracle(String),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}
