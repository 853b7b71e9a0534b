use thiserror::Error;

/// Errors raised while validating a scenario or driving a simulation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("failed to parse configuration: {0}")]
    Parse(#[from] toml::de::Error),

    #[error("failed to serialize configuration: {0}")]
    Serialize(#[from] toml::ser::Error),

    #[error("neighbor query: {0}")]
    Neighbor(#[from] NeighborError),

    #[error("non-finite state for agent {agent} at step {step}")]
    NonFinite { step: u64, agent: usize },

    #[error("{0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Failures of the neighbor-search layer.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NeighborError {
    #[error("cannot build an index over zero points")]
    EmptyIndex,
    #[error("point {id} has dimension {found}, expected {expected}")]
    DimensionMismatch {
        id: usize,
        expected: usize,
        found: usize,
    },
    #[error("k = {k} out of range: {available} candidate points")]
    KOutOfRange { k: usize, available: usize },
    #[error("empty subsample")]
    EmptySubsample,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
