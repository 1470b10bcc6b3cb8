use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("syntax error at {line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unsafe variable {variable} in rule at {line}:{column}")]
    Unsafe {
        variable: String,
        line: usize,
        column: usize,
    },

    #[error("grounding produced more than {cap} rule instances")]
    GroundingBlowup { cap: usize },

    #[error("{what}: size {size} exceeds cap {cap}")]
    CapExceeded {
        what: &'static str,
        size: usize,
        cap: usize,
    },

    #[error("unfounded-set tracking overflow: more than {cap} sets")]
    UnfoundedOverflow { cap: usize },

    #[error("invalid c-atom: {0}")]
    InvalidCAtom(String),

    #[error("invalid step: {0}")]
    InvalidStep(String),

    #[error("jump target inconsistent: the auxiliary program has no answer set (the overall program may still be consistent)")]
    NoAnswerSet,

    #[error("search exhausted after {nodes} nodes without a verdict")]
    SearchExhausted { nodes: u64 },

    #[error("unknown rule: {0}")]
    UnknownRule(String),

    #[error("unknown computation node {0}")]
    UnknownNode(usize),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("dependency graph is cyclic: {}", witness.join(" -> "))]
    CyclicGraph { witness: Vec<String> },

    #[error("invalid state: {0}")]
    InvalidState(String),
}

impl Error {
    /// Errors that stem from a configured cap rather than a semantic verdict.
    pub fn is_cap(&self) -> bool {
        matches!(
            self,
            Error::CapExceeded { .. }
                | Error::UnfoundedOverflow { .. }
                | Error::SearchExhausted { .. }
                | Error::GroundingBlowup { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
