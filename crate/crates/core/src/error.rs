use thiserror::Error;

use crate::teacher::TeacherError;

/// Errors raised by model construction, parsing and the analysis operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("symbol index {index} out of range for an alphabet of {size} symbols")]
    SymbolOutOfRange { index: usize, size: usize },

    #[error("unknown input symbol `{0}`")]
    UnknownSymbol(String),

    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),

    #[error("bit index {index} out of range 1..={bits}")]
    BitOutOfRange { index: usize, bits: usize },

    #[error("invalid structure: {0}")]
    InvalidStructure(String),

    #[error("alphabets differ")]
    AlphabetMismatch,

    #[error("output widths differ ({0} vs {1})")]
    WidthMismatch(usize, usize),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("partition is not a congruence: states {p} and {q} share a block but {reason}")]
    NotCongruence { p: usize, q: usize, reason: String },

    #[error("requirement error at position {pos}: {msg}")]
    Requirement { pos: usize, msg: String },

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Teacher(#[from] TeacherError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
