use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("malformed instance: {0}")]
    Malformed(String),
    #[error("probabilities sum to {0}")]
    ProbabilitySum(String),
    #[error("capacity must be positive")]
    NonPositiveCapacity,
    #[error("customer {0} has zero expected demand")]
    ZeroExpectedDemand(usize),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("customer {vertex} has degree {degree}")]
    Degree { vertex: usize, degree: String },
    #[error("subtour among customers {0:?}")]
    Subtour(Vec<usize>),
    #[error("point is not integer")]
    NotInteger,
    #[error("empty customer set")]
    EmptySet,
    #[error("{what} too large: {size} > {limit}")]
    TooLarge {
        what: &'static str,
        size: usize,
        limit: usize,
    },
    #[error("negative cut bound")]
    NegativeBound,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("variable index {0} out of range")]
    BadVariable(usize),
    #[error("no fractional edge to branch on")]
    NothingToBranch,
    #[error("LP relaxation is unbounded")]
    UnboundedRelaxation,
}

pub type Result<T> = std::result::Result<T, Error>;
