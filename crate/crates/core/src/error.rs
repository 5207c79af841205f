use thiserror::Error;

/// Largest supported dimension. Keeps every intermediate sum of the
/// reconstruction formula well inside `i64` together with [`MAX_STATE`].
pub const MAX_DIMENSION: usize = 8;

/// Largest supported state magnitude.
pub const MAX_STATE: i64 = 1 << 40;

/// Largest dense rule table, in entries.
pub const MAX_TABLE_ENTRIES: u64 = 1 << 31;

/// Largest torus, in cells.
pub const MAX_CELLS: u64 = 1 << 20;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("dimension must be in 1..={MAX_DIMENSION}, got {0}")]
    InvalidDimension(usize),
    #[error("every side of the lattice must be at least 5, got {0}")]
    SideTooSmall(u32),
    #[error("torus has too many cells (limit {MAX_CELLS})")]
    LatticeTooLarge,
    #[error("direction index {index} is out of range for dimension {dim}")]
    InvalidDirection { index: usize, dim: usize },
    #[error("directions {0} and {1} do not form a neighborhood-sharing pair")]
    InvalidOmegaPair(String, String),
    #[error("invalid pair selection: {0}")]
    InvalidLambda(String),
    #[error("cell coordinate {coord} is outside side length {side}")]
    CellOutOfRange { coord: u32, side: u32 },
    #[error("overlap classification requires two distinct cells")]
    EqualCells,
    #[error("state set must contain 0")]
    MissingZeroState,
    #[error("state set must hold at least two distinct states")]
    StateSetTooSmall,
    #[error("duplicate state {0} in state set")]
    DuplicateState(i64),
    #[error("state magnitude {0} exceeds the supported bound {MAX_STATE}")]
    StateTooLarge(i64),
    #[error("state {0} is not a member of the state set")]
    UnknownState(i64),
    #[error("neighborhood configuration must list {expected} states, got {got}")]
    BadConfigLength { expected: usize, got: usize },
    #[error("rule table must hold {expected} entries, got {got}")]
    BadTableLength { expected: u64, got: usize },
    #[error("rule table would need {0} entries (limit {MAX_TABLE_ENTRIES})")]
    TableTooLarge(u64),
    #[error("operation is only defined for dimension {expected}, rule has dimension {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("configuration must list {expected} cells, got {got}")]
    BadCellCount { expected: u64, got: usize },
    #[error("search space too large: {0}")]
    SearchTooLarge(String),
    #[error("oracle budget exceeded: {needed} configurations, budget {budget}")]
    BudgetExceeded { needed: u128, budget: u64 },
    #[error("sampled oracle needs at least one sample")]
    NoSamples,
    #[error("rule is not number-conserving (violates {equation} at {config:?}), so it has no parametric form")]
    NotConservingAt { config: Vec<i64>, equation: String },
    #[error("classification requires a number-conserving rule")]
    ClassifyNonConserving,
    #[error("parametric rule is not closed: configuration {config:?} reconstructs to {value}, outside the state set")]
    NotClosedAt { config: Vec<i64>, value: i64 },
    #[error("invalid rule file: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
