use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid ring: {0}")]
    InvalidRing(String),
    #[error("ring mismatch: {0}")]
    RingMismatch(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("character of order {order} needs residue degree f = {required_f}")]
    CharacterOrder { order: u64, required_f: u32 },
    #[error("hypothesis failed: {0}")]
    Hypothesis(String),
    #[error("insufficient precision: headroom {have} too small, need at least {need}")]
    InsufficientPrecision { have: u32, need: u32 },
    #[error("bounds exceeded: {0}")]
    Bounds(String),
    #[error("schema: {0}")]
    Schema(String),
    #[error("canonical form mismatch: {0}")]
    Tamper(String),
    #[error("invalid input: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;
