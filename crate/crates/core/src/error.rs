use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },

    /// Wraps a validation error with the input line it was detected on.
    #[error("line {line}: {source}")]
    AtLine {
        line: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("unknown parent `{0}`")]
    UnknownParent(String),

    #[error("duplicate node name `{0}`")]
    DuplicateNode(String),

    #[error("node `{node}` lists parent `{parent}` more than once")]
    DuplicateParent { node: String, parent: String },

    #[error("node `{node}`: probability {value} is outside [0, 1]")]
    ProbabilityOutOfRange { node: String, value: f64 },

    #[error("cycle detected through node `{0}`")]
    Cycle(String),

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("unknown node `{0}`")]
    UnknownNode(String),

    #[error("node `{0}` is observed more than once")]
    DuplicateEvidence(String),

    #[error("node `{0}` is already assigned")]
    AlreadyAssigned(String),

    #[error("state of parent `{parent}` of node `{node}` is missing")]
    MissingParentState { node: String, parent: String },

    #[error("assignment is incomplete: {unassigned} node(s) unassigned")]
    IncompleteAssignment { unassigned: usize },

    #[error("{free} free nodes exceed the enumeration cap of {cap}")]
    FreeNodeCapExceeded { free: usize, cap: usize },

    #[error("evidence has probability zero")]
    ImpossibleEvidence,

    #[error("no assigned node at level {0} has an unassigned parent")]
    NoFindingsAtLevel(usize),

    #[error("invalid epsilon {0}: must be finite and >= 0")]
    InvalidEpsilon(f64),

    #[error("invalid epsilon schedule: {0}")]
    InvalidSchedule(String),

    #[error("infeasible network shape: {0}")]
    InfeasibleShape(String),

    #[error("requested {requested} findings but only {available} deepest-level nodes exist")]
    TooManyFindings { requested: usize, available: usize },

    #[error("search stopped after exploring {limit} states")]
    StateBudgetExceeded { limit: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// The underlying error with any line wrapper removed.
    pub fn kind(&self) -> &Error {
        match self {
            Error::AtLine { source, .. } => source.kind(),
            other => other,
        }
    }

    pub(crate) fn at_line(self, line: usize) -> Error {
        match self {
            e @ (Error::Syntax { .. } | Error::AtLine { .. }) => e,
            e => Error::AtLine {
                line,
                source: Box::new(e),
            },
        }
    }
}
