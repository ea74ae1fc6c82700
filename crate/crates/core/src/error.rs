use thiserror::Error;

/// Every failure surfaced by the library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("contraction ratio must lie in (0, 1/L): {0}")]
    BadRatio(String),
    #[error("translations must be strictly increasing: {0}")]
    NotSorted(String),
    #[error("first-level intervals are not separated: {0}")]
    SeparationViolated(String),
    #[error("alphabet needs at least two symbols and one translation per symbol: {0}")]
    BadAlphabet(String),
    #[error("symbol {symbol} is outside the alphabet 1..={alphabet}")]
    SymbolOutOfRange { symbol: u32, alphabet: usize },
    #[error("word must be nonempty")]
    EmptyWord,
    #[error("period must be nonempty")]
    EmptyPeriod,
    #[error("point lies in a gap at level {0}, so it is not in the attractor")]
    GapPoint(usize),
    #[error("shift by {shift} exhausts a truncated coding of depth {depth}")]
    DepthExhausted { shift: usize, depth: usize },
    #[error("radius must be positive")]
    NonpositiveRadius,
    #[error("rate value must be positive")]
    NonpositiveRate,
    #[error("invalid range: {0}")]
    BadRange(String),
    #[error("level with {words} words exceeds the enumeration cap {cap}")]
    LevelTooLarge { words: u128, cap: u128 },
    #[error("ball has no certified positive measure")]
    EmptyBall,
    #[error("r^-gamma f(r) is not increasing as r -> 0: {0}")]
    MonotonicityViolated(String),
    #[error("unknown or unsupported function family: {0}")]
    UnknownFamily(String),
    #[error("a horizon is required for tabulated rates")]
    HorizonRequired,
    #[error("exponent b must be nonnegative")]
    NegativeB,
    #[error("no root: {0}")]
    NoRoot(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
