use std::fmt;

use crate::symbol::{Sym, Value};

/// Location-tagged syntax error.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error at {}:{}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("arity mismatch for relation {rel}: expected {expected}, found {found}")]
    Arity { rel: Sym, expected: usize, found: usize },

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("chase budget of {0} steps exhausted")]
    BudgetExhausted(u64),

    #[error("TGD set is neither full nor non-recursive; the chase may not terminate")]
    NonTerminating,

    #[error("database violates TGD #{tgd} at frontier ({})", render_tuple(.frontier))]
    TgdViolation { tgd: usize, frontier: Vec<Value> },

    #[error("invalid prefix constraint: {0}")]
    InvalidConstraint(String),

    #[error("index {index} is out of bound: there are {count} answers")]
    OutOfBound { index: u64, count: u64 },

    #[error("an answer was produced more than {m} times")]
    MultiplicityExceeded { m: usize },

    #[error("answer count overflows 64 bits")]
    Overflow,

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn render_tuple(t: &[Value]) -> String {
    t.iter().map(|v| v.render()).collect::<Vec<_>>().join(",")
}

impl Error {
    /// Process exit code used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_) | Error::Io(_) | Error::Config(_) => 1,
            Error::BudgetExhausted(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
