use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum GasketError {
    #[error("dimension must satisfy 1 <= d <= {max}, got {got}")]
    InvalidDimension { got: usize, max: usize },
    #[error("symbol {symbol} out of range for alphabet {{0..={max}}}")]
    SymbolOutOfRange { symbol: u8, max: u8 },
    #[error("operation `{0}` is undefined at the root")]
    RootNotAllowed(&'static str),
    #[error("barycentric level {0} exceeds the supported depth {1}")]
    LevelTooDeep(u32, u32),
    #[error("start word has length {len}, but the operation requires length {bound} or less")]
    StartTooDeep { len: usize, bound: usize },
    #[error("step cap of {cap} steps exceeded before reaching level {target}")]
    StepCapExceeded { cap: u64, target: usize },
    #[error("state space of {states} states exceeds the solver budget of {budget}")]
    SolverBudget { states: usize, budget: usize },
    #[error("singular linear system (pivot vanished at row {0})")]
    SingularSystem(usize),
    #[error("word `{0}` does not lie in the 0-subtree")]
    NotInZeroSubtree(String),
    #[error("cell set is not invariant under the stabilizer of symbol 0")]
    NotStabilizerInvariant,
    #[error("cell levels differ: {0} vs {1}")]
    LevelMismatch(usize, usize),
    #[error("parity sequence repeats at index {0}")]
    ParityRepeat(usize),
    #[error("parity sequence is empty")]
    EmptyParitySequence,
    #[error("images {0:?} are not a bijection of the alphabet")]
    NotAPermutation(Vec<u8>),
    #[error("cannot parse word `{input}`: {reason}")]
    WordParse { input: String, reason: String },
    #[error("cell member `{member}` has length {got}, expected {expected}")]
    MemberLength {
        member: String,
        got: usize,
        expected: usize,
    },
}
