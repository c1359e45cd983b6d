use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite coordinate in {0}")]
    NonFinite(&'static str),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: &'static str },
    #[error("number of cells {k} outside [1, {p}]")]
    ClusterCountOutOfRange { k: usize, p: usize },
    #[error("score cache covers {cached} steps but the context only has {available}")]
    CacheMismatch { cached: usize, available: usize },
    #[error("grid of {cells} cells exceeds the limit of {limit}")]
    GridTooLarge { cells: u128, limit: u128 },
    #[error("time step {t} beyond the schedule horizon {horizon}")]
    BeyondHorizon { t: usize, horizon: usize },
    #[error("validity condition violated: {0}")]
    Validity(&'static str),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
}

pub(crate) fn invalid(name: &'static str, reason: &'static str) -> Error {
    Error::InvalidParameter { name, reason }
}
