use thiserror::Error;

/// Errors raised by the distribution, channel, protocol and experiment layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain size mismatch: {left} vs {right}")]
    DomainMismatch { left: usize, right: usize },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("order {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("domain size {0} must be even")]
    OddDomain(usize),

    #[error("expected {expected} samples, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("cannot split {players} players into {groups} groups")]
    InfeasiblePartition { players: usize, groups: usize },

    #[error("protocol needs at least {needed} players, got {available}")]
    InsufficientPlayers { needed: usize, available: usize },

    #[error("message {index} has width {actual}, expected {expected}")]
    MessageWidth {
        index: usize,
        expected: usize,
        actual: usize,
    },

    #[error("sampling-only channel: output space of {0} bits is too large to enumerate")]
    NotEnumerable(usize),

    #[error("config error at {location}: {message}")]
    Config { location: String, message: String },

    #[error("unknown protocol `{0}`")]
    UnknownProtocol(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
