use thiserror::Error;

use crate::semantics::QuantifierKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid quantifier {kind}: {reason}")]
    InvalidQuantifier { kind: QuantifierKind, reason: String },

    #[error("set `{0}` is not declared")]
    NamedSetMissing(String),

    #[error("set `{name}` contains element {element} outside universe of size {universe_size}")]
    ElementOutOfUniverse { name: String, element: u32, universe_size: u32 },

    #[error("set `{0}` is declared more than once")]
    DuplicateSet(String),

    #[error("invalid signature: {0}")]
    InvalidSignature(String),

    #[error("invalid formula: {0}")]
    InvalidFormula(String),

    #[error("search space of {required} region vectors exceeds the work limit of {limit}")]
    SearchSpaceTooLarge { required: u128, limit: u128 },

    #[error("premise is unsatisfiable within a universe of at most {bound} elements")]
    UnsatisfiablePremise { bound: u32 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("pattern for {kind} (record {record}) does not compile: {message}")]
    PatternCompile { kind: String, record: usize, message: String },

    #[error("pattern file: {0}")]
    PatternFile(String),

    #[error("unknown field `{0}`")]
    UnknownField(String),

    #[error("{0}")]
    Statistics(String),

    #[error("template `{template}`: {message}")]
    Template { template: String, message: String },

    #[error("could not reach label balance within the retry budget: achieved {histogram}")]
    Balance { histogram: String },

    #[error("substitution `{from}` -> `{to}` collides with an existing lexeme")]
    SubstitutionCollision { from: String, to: String },

    #[error("label changed under substitution: {before} -> {after}")]
    LabelChanged { before: String, after: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
