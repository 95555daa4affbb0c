use thiserror::Error;

use crate::tree::TreePosition;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unbalanced math delimiter at byte {offset}")]
    UnbalancedDelimiter { offset: usize },

    #[error("tree cap exceeded: {what} is {value}, limit {limit}")]
    CapExceeded {
        what: &'static str,
        value: usize,
        limit: usize,
    },

    #[error("operator {0:?} is not in the math vocabulary")]
    OovOperator(String),

    #[error("expected a raw tree, found {0}")]
    NotRaw(String),

    #[error("invalid traversal at item {index}: {reason}")]
    InvalidTraversal { index: usize, reason: String },

    #[error("cannot print node: {0}")]
    UnprintableNode(String),

    #[error("token id {id} is not allowed here (position {position:?})")]
    IllegalToken { id: u32, position: TreePosition },

    #[error("unknown token id {0}")]
    UnknownId(u32),

    #[error("invalid vocabulary: {0}")]
    Vocab(String),

    #[error("line {line}: {source}")]
    AtLine { line: usize, source: Box<Error> },

    #[error("prediction and gold files are misaligned: {pred} vs {gold} lines")]
    Misaligned { pred: usize, gold: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
