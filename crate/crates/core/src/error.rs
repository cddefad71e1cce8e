use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unknown label `{label}` for variable {var}")]
    UnknownLabel { var: String, label: String },

    #[error("empty subset literal for variable {var}")]
    EmptySubset { var: String },

    #[error("duplicate label `{label}` in subset literal for variable {var}")]
    DuplicateLabel { var: String, label: String },

    #[error("malformed literal `{0}`")]
    Syntax(String),

    #[error("invalid frame: {0}")]
    Frame(String),

    #[error("table shape mismatch: {0}")]
    Shape(String),

    #[error("table is not K-representable: K({child}|{cfg}) = {value:.9}")]
    NotKRepresentable { cfg: String, child: String, value: f64 },

    #[error("infeasible conditional probability for {node}: {row} = {value:.9}")]
    Infeasible { node: String, row: String, value: f64 },

    #[error("scope mismatch: {0}")]
    Scope(String),

    #[error("problem too large: {0}")]
    TooLarge(String),

    #[error("network contains a cycle through {0}")]
    Cycle(String),

    #[error("structure violation: {0}")]
    Structure(String),

    #[error("no edge {parent} -> {child}")]
    NoSuchEdge { parent: String, child: String },

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
