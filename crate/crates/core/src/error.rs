use thiserror::Error;

use crate::dsl::ParseDiagnostic;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{0}")]
    Parse(ParseDiagnostic),

    #[error("dependency #{} has an empty left side", origin + 1)]
    EmptyLhs { origin: usize },

    #[error("dependency #{} is trivial: its right side is empty once left-side attributes are removed", origin + 1)]
    EmptyRhs { origin: usize },

    #[error("attribute `{name}` is not declared")]
    UndeclaredAttribute { name: String },

    #[error("attribute `{name}` is declared twice")]
    DuplicateAttribute { name: String },

    #[error("declared key is empty")]
    EmptyKey,

    #[error("{count} attributes exceed the cap of {cap}")]
    AttributeCapExceeded { count: usize, cap: usize },

    #[error("declared key {{{key}}} is not a candidate key")]
    DeclaredKeyNotCandidate { key: String },

    #[error("schema has no candidate key")]
    NoKey,

    #[error("attribute `{name}` is outside the primary key and no dependency determines it")]
    UnreachableAttribute { name: String },

    #[error("the cookbook method handles functional dependencies only; schema declares multivalued dependencies")]
    MvdPresent,

    #[error("decomposition does not cover attributes {{{missing}}}")]
    Coverage { missing: String },

    #[error("invalid decomposition: {0}")]
    InvalidDecomposition(String),

    #[error("chase exceeded {cap} tableau rows")]
    ChaseRowCap { cap: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("quiz cannot be generated: {0}")]
    QuizUnsupported(String),

    #[error("question Q{question} has no option `{id}`")]
    UnknownOption { question: usize, id: String },

    #[error("submission does not match the quiz: {0}")]
    QuizMismatch(String),

    #[error("no grade reports given")]
    EmptyInput,
}
