use std::fmt;
use std::process::ExitCode;

/// Broad failure classes, each with its own process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad arguments or configuration (exit 2).
    Validation,
    /// Unreadable, malformed or inconsistent input data (exit 3).
    Data,
    /// A broken internal invariant (exit 4).
    Internal,
}

impl ErrorKind {
    pub fn exit_code(self) -> u8 {
        match self {
            ErrorKind::Validation => 2,
            ErrorKind::Data => 3,
            ErrorKind::Internal => 4,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ErrorKind,
    pub source: anyhow::Error,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.source)
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.kind.exit_code())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Tags an error with a kind.
pub trait Classify<T> {
    fn kind(self, kind: ErrorKind) -> CliResult<T>;
    fn validation(self) -> CliResult<T>
    where
        Self: Sized,
    {
        self.kind(ErrorKind::Validation)
    }
    fn data(self) -> CliResult<T>
    where
        Self: Sized,
    {
        self.kind(ErrorKind::Data)
    }
    fn internal(self) -> CliResult<T>
    where
        Self: Sized,
    {
        self.kind(ErrorKind::Internal)
    }
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn kind(self, kind: ErrorKind) -> CliResult<T> {
        self.map_err(|e| CliError {
            kind,
            source: e.into(),
        })
    }
}

pub fn fail<T>(kind: ErrorKind, msg: impl fmt::Display) -> CliResult<T> {
    Err(CliError {
        kind,
        source: anyhow::anyhow!("{msg}"),
    })
}
