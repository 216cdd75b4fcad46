use thiserror::Error;

/// Everything that can go wrong while validating, evaluating, simulating or
/// searching.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("block assignment is empty (m must be at least 1)")]
    EmptyAssignment,

    #[error("block assignment is not strictly increasing at round {round} ({prev} -> {value})")]
    NonMonotoneN { round: usize, prev: u64, value: u64 },

    #[error("error vector increases at round {round} ({prev} -> {value})")]
    NonMonotoneE { round: usize, prev: f64, value: f64 },

    #[error("length mismatch: {n} block lengths but {e} error probabilities")]
    LengthMismatch { n: usize, e: usize },

    #[error("error probability {value} at round {round} is outside the open interval (0, 1)")]
    DegenerateEpsilon { round: usize, value: f64 },

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("round index {index} out of range 1..={m}")]
    IndexOutOfRange { index: usize, m: usize },

    #[error("series did not converge within {cap} rounds")]
    NoConvergence { cap: usize },

    #[error("search width {width} exceeds the exhaustive cap of {cap}")]
    WidthExceeded { width: usize, cap: usize },

    #[error("bitmask has no set bit")]
    EmptyMask,

    #[error("invalid search space: {0}")]
    InvalidSpace(String),

    #[error("invalid simulation config: {0}")]
    InvalidSimConfig(String),

    #[error("{failures} consecutive failed packets without a successful decode")]
    RunawayCycle { failures: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;
