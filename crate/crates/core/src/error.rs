use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("pattern {pattern} is empty")]
    EmptySet { pattern: usize },

    #[error("pattern {pattern} contains index {index}, outside the alphabet [1, {k}]")]
    IndexOutOfRange { pattern: usize, index: u64, k: usize },

    #[error("pattern {pattern} lists index {index} more than once")]
    DuplicateIndexInSet { pattern: usize, index: u32 },

    #[error("patterns {first} and {second} are the same set")]
    DuplicatePattern { first: usize, second: usize },

    #[error("bad pattern index list: {0}")]
    BadIndexList(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("condition count {condition} is not below the arity {arity}")]
    BadSplit { condition: usize, arity: usize },

    #[error("bad message sequence: {0}")]
    BadSequence(String),

    #[error("server count {0} is too small; at least 2 servers are required")]
    NTooSmall(usize),

    #[error("exhaustive search over {mu} messages exceeds the cap of {cap}")]
    TooManyMessagesForExhaustive { mu: usize, cap: usize },

    #[error("message entropies are not balanced (min {min}, max {max})")]
    NotBalanced { min: f64, max: f64 },

    #[error("sequence of length {len} is too short for horizon {horizon}")]
    SequenceTooShort { len: usize, horizon: usize },

    #[error("pattern size {m} does not divide alphabet size {k}")]
    NotDivisible { k: usize, m: usize },

    #[error("depth {depth} exceeds the allowed maximum {max}")]
    DepthTooLarge { depth: usize, max: usize },

    #[error("alphabet size {0} must be even")]
    OddK(usize),

    #[error("codec budget is infeasible: {0}")]
    InfeasibleBudget(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("codeword block {block} holds an index beyond the weight window")]
    InvalidCodeword { block: usize },

    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),

    #[error("{0}")]
    Domain(String),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EmptySet { .. } => "EmptySet",
            Error::IndexOutOfRange { .. } => "IndexOutOfRange",
            Error::DuplicateIndexInSet { .. } => "DuplicateIndexInSet",
            Error::DuplicatePattern { .. } => "DuplicatePattern",
            Error::BadIndexList(_) => "BadIndexList",
            Error::Parse(_) => "ParseError",
            Error::BadSplit { .. } => "BadSplit",
            Error::BadSequence(_) => "BadSequence",
            Error::NTooSmall(_) => "NTooSmall",
            Error::TooManyMessagesForExhaustive { .. } => "TooManyMessagesForExhaustive",
            Error::NotBalanced { .. } => "NotBalanced",
            Error::SequenceTooShort { .. } => "SequenceTooShort",
            Error::NotDivisible { .. } => "NotDivisible",
            Error::DepthTooLarge { .. } => "DepthTooLarge",
            Error::OddK(_) => "OddK",
            Error::InfeasibleBudget(_) => "InfeasibleBudget",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::InvalidCodeword { .. } => "InvalidCodeword",
            Error::LayoutMismatch(_) => "LayoutMismatch",
            Error::Domain(_) => "DomainError",
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
