use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("{0}")]
    Parse(String),
    #[error("duplicate parameter `{0}`")]
    DuplicateParameter(String),
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("invalid program: {0}")]
    InvalidProgram(String),
    #[error("invalid format: {0}")]
    InvalidFormat(String),
    #[error("floating-point overflow")]
    Overflow,
    #[error("no range given for variable `{0}`")]
    MissingRange(String),
    #[error("unsupported guard `{guard}`: {reason}")]
    UnsupportedGuard { guard: String, reason: String },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("conditional tuple count exceeds the cap of {0}")]
    TupleCapExceeded(usize),
    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
