use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("malformed input at line {line}: {msg}")]
    MalformedInput { line: usize, msg: String },

    #[error("clause {clause} has width {width}, expected {expected}")]
    NonUniformWidth {
        clause: usize,
        width: usize,
        expected: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("argument outside (0, 1): {0}")]
    Domain(f64),

    #[error("marking did not converge within {rounds} resampling rounds")]
    ResampleBudgetExceeded { rounds: usize },

    #[error("marking violates {violations} constraint(s)")]
    MarkingInvalid { violations: usize },

    #[error("simplified formula contains an empty clause")]
    EmptyClause,

    #[error("residual clause graph is not a forest (variable {var} occurs in {occurrences} clauses)")]
    NotAForest { var: usize, occurrences: usize },

    #[error("{cycle_vars} cycle-breaking variables exceed the budget of {cap}")]
    ExcessBudgetExceeded { cycle_vars: usize, cap: usize },

    #[error("connected component with {size} clauses exceeds the cap of {cap}")]
    ComponentTooLarge { size: usize, cap: usize },

    #[error("no satisfying extension exists when sampling variable {var}")]
    UnsatisfiableResidual { var: usize },

    #[error("conditional marginal undefined: {0}")]
    UndefinedConditional(String),

    #[error("{vars} free variables exceed the enumeration limit of {limit}")]
    TooLarge { vars: usize, limit: usize },

    #[error("distributions are over different variable sets")]
    SupportMismatch,
}
