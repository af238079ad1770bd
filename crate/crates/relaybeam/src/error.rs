use thiserror::Error;

/// Errors surfaced by the simulator library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("matrix is singular or rank-deficient: {0}")]
    Singular(String),

    #[error("group enumeration exceeded the safety limit of {limit} groups on subcarrier {subcarrier}")]
    GroupLimit { subcarrier: usize, limit: usize },

    #[error("no groups available for selection")]
    EmptyGroupSet,
}

pub type Result<T> = std::result::Result<T, Error>;
