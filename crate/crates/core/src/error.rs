use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("literal {literal} refers to concept {concept} but the sample has {len} concepts")]
    ConceptOutOfRange {
        literal: String,
        concept: usize,
        len: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(
        "AND fusion contradiction on concept {concept}: clause `{first}` conflicts with clause `{second}`"
    )]
    Contradiction {
        concept: usize,
        first: String,
        second: String,
    },

    #[error("training diverged at epoch {epoch} (loss = {loss})")]
    Divergence { epoch: usize, loss: f64 },

    #[error("parameter shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("parse error at row {row}, column {column}: {message}")]
    Csv {
        row: usize,
        column: String,
        message: String,
    },

    #[error("rule syntax error: {0}")]
    RuleSyntax(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
