use thiserror::Error;

/// Errors surfaced by construction, validation, and configuration parsing.
///
/// Algorithm internals use assertions for contract violations instead; these
/// variants cover data that callers may legitimately get wrong.
#[derive(Debug, Error)]
pub enum Error {
    #[error("accuracy margin {0} must lie in (0, 0.5]")]
    MarginOutOfRange(f64),

    #[error("logistic gamma {0} must be finite and non-negative")]
    GammaOutOfRange(f64),

    #[error("score gap {0} must be finite and positive")]
    ScoreGapOutOfRange(f64),

    #[error("user pool must not be empty")]
    EmptyUserPool,

    #[error("item list must not be empty")]
    EmptyItemList,

    #[error("item order is not a permutation of the item universe")]
    NotAPermutation,

    #[error("node {0} is not a leaf")]
    NotALeaf(usize),

    #[error("subset size {size} must lie in 1..={pool}")]
    SubsetSizeOutOfRange { size: usize, pool: usize },

    #[error("config line {line}: {message}")]
    ConfigParse { line: usize, message: String },

    #[error("config: {0}")]
    ConfigInvalid(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
