use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Malformed edge-list line (1-based line number).
    Parse { line: usize, message: String },
    EmptyGraph,
    EmptyDistribution,
    /// Operand shapes or lengths disagree.
    Dimension(String),
    /// A parameter is outside its documented range.
    InvalidArgument(String),
    /// Not enough observed data for the requested operation.
    InsufficientData(String),
    /// Feature schema of an input does not match the fitted state.
    SchemaMismatch { expected: u32, found: u32 },
    /// Training produced a non-finite loss or parameter.
    NonFinite(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Parse { line, message } => write!(f, "parse error on line {line}: {message}"),
            Error::EmptyGraph => f.write_str("empty graph"),
            Error::EmptyDistribution => f.write_str("empty distribution"),
            Error::Dimension(m) => write!(f, "dimension mismatch: {m}"),
            Error::InvalidArgument(m) => write!(f, "invalid argument: {m}"),
            Error::InsufficientData(m) => write!(f, "insufficient data: {m}"),
            Error::SchemaMismatch { expected, found } => {
                write!(f, "feature schema mismatch: expected version {expected}, found {found}")
            }
            Error::NonFinite(m) => write!(f, "non-finite value: {m}"),
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn dim_err(msg: impl Into<String>) -> Error {
    Error::Dimension(msg.into())
}

pub(crate) fn arg_err(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
