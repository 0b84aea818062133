use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input needs at least two distinct key values")]
    DegenerateInput,

    #[error("keys must be strictly increasing (violated at position {0})")]
    UnsortedKeys(usize),

    #[error("poison budget exceeded: {used} poisons for a budget of {budget}")]
    BudgetViolation { used: u64, budget: u64 },

    #[error("index {index} out of range for {len} keys")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("poison {0} is not a free integer strictly between the extreme keys")]
    InvalidPoison(u64),

    #[error("search space of {count} candidates exceeds the limit of {limit}")]
    SearchSpaceTooLarge { count: u128, limit: u128 },

    #[error("no feasible poison placement exists")]
    NoFeasiblePoison,

    #[error("bracket [{lo}, {hi}] does not contain the min-max value")]
    InvalidBracket { lo: f64, hi: f64 },

    #[error("at least {needed} keys are required, got {got}")]
    TooFewKeys { needed: usize, got: usize },

    #[error("sample collapsed to fewer than two distinct keys")]
    DegenerateSample,

    #[error("key file holds {available} keys but {needed} were requested")]
    FileTooSmall { available: usize, needed: usize },

    #[error("malformed key file: {0}")]
    MalformedFile(String),

    #[error("key {0} not present in the searched array")]
    KeyNotFound(u64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
