use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("malformed rational `{0}`")]
    MalformedRational(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
    #[error("unknown item `{0}`")]
    UnknownItem(String),
    #[error("unknown agent `{0}`")]
    UnknownAgent(String),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("search budget of {limit} states exceeded")]
    BudgetExceeded { limit: u64 },
    #[error("malformed partition: {0}")]
    MalformedPartition(String),
    #[error("allocation leaves {missing} item(s) unassigned")]
    IncompleteAllocation { missing: usize },
    #[error("no active agent for item position {position}")]
    NoActiveAgent { position: usize },
    #[error("items without an eligible agent: {0:?}")]
    NoEligibleAgent(Vec<String>),
    #[error("fractional support violates the vertex structure: {0}")]
    SupportInvariant(String),
    #[error("no feasible alpha up to {ceiling}")]
    NoFeasibleAlpha { ceiling: String },
    #[error("instance is not canonical: {0:?}")]
    NotCanonical(Vec<String>),
    #[error("malformed document: {0}")]
    Format(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
