//! Crate-wide error type.

use std::fmt;

/// Errors surfaced by the toolkit.
///
/// The CLI maps these onto exit codes: usage errors exit 1, data/format
/// errors exit 2, numeric failures exit 3.
#[derive(Debug)]
pub enum Error {
    /// Tensor shapes do not conform to an operator's shape rules.
    Shape(String),
    /// A computation produced NaN or infinity; carries the operator name.
    Numeric(String),
    /// An API contract was violated (non-scalar backward, double backward
    /// without reset, mismatched ensemble vocabularies, ...).
    Contract(String),
    /// A file on disk does not match its expected format. `offset` is the
    /// byte position of the first inconsistency when known.
    Format { msg: String, offset: Option<u64> },
    /// Configuration file or option is invalid.
    Config(String),
    /// Corpus/feature alignment or content problems.
    Data(String),
    /// The requested gradient-of-gradient passes through an operator with
    /// no second-order rule.
    UnsupportedSecondOrder(&'static str),
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Shape(m) => write!(f, "shape error: {m}"),
            Error::Numeric(m) => write!(f, "numeric error: {m}"),
            Error::Contract(m) => write!(f, "contract violation: {m}"),
            Error::Format { msg, offset: Some(o) } => {
                write!(f, "format error at byte {o}: {msg}")
            }
            Error::Format { msg, offset: None } => write!(f, "format error: {msg}"),
            Error::Config(m) => write!(f, "config error: {m}"),
            Error::Data(m) => write!(f, "data error: {m}"),
            Error::UnsupportedSecondOrder(op) => {
                write!(f, "operator `{op}` has no second-order gradient rule")
            }
            Error::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Exit code for the CLI: 2 for data/format problems, 3 for numeric
    /// failures. Usage errors (exit 1) are produced by the CLI layer itself.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numeric(_) => 3,
            _ => 2,
        }
    }
}
