use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("oracle grid of {requested} evaluations exceeds budget {budget}")]
    GridBudget { requested: u128, budget: u128 },

    #[error("oracle supports at most {max} servers, got {got}")]
    TooManyServers { max: usize, got: usize },

    #[error("failed to parse configuration: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
