//! Failure categories and their process exit codes.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    /// Bad flags, unreadable or invalid configuration.
    Config,
    /// Missing, malformed or inconsistent input data.
    Data,
    /// Anything that fails after inputs were accepted.
    Runtime,
}

impl FailureKind {
    pub fn exit_code(self) -> i32 {
        match self {
            FailureKind::Config => 2,
            FailureKind::Data => 3,
            FailureKind::Runtime => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FailureKind::Config => "config",
            FailureKind::Data => "data",
            FailureKind::Runtime => "runtime",
        }
    }
}

#[derive(Debug)]
pub struct Failure {
    pub kind: FailureKind,
    pub error: anyhow::Error,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} error: {:#}", self.kind.name(), self.error)
    }
}

impl std::error::Error for Failure {}

pub type CmdResult<T> = Result<T, Failure>;

pub trait Categorize<T> {
    fn kind(self, kind: FailureKind) -> CmdResult<T>;
}

impl<T, E: Into<anyhow::Error>> Categorize<T> for Result<T, E> {
    fn kind(self, kind: FailureKind) -> CmdResult<T> {
        self.map_err(|e| Failure { kind, error: e.into() })
    }
}

pub fn fail(kind: FailureKind, msg: impl fmt::Display) -> Failure {
    Failure { kind, error: anyhow::anyhow!("{msg}") }
}
