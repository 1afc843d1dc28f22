use std::fmt;
use std::io;

use dnaphash::{CodecError, HashError, IndexError, SimError};

/// A failed run, classified by exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags or arguments (exit 1).
    Usage(String),
    /// Input that parses but cannot be processed (exit 2).
    Data(String),
    /// Unreadable or unwritable files, corrupt indexes (exit 3).
    Io(String),
}

impl Failure {
    pub const USAGE: u8 = 1;
    pub const DATA: u8 = 2;
    pub const IO: u8 = 3;

    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => Self::USAGE,
            Failure::Data(_) => Self::DATA,
            Failure::Io(_) => Self::IO,
        }
    }

    pub fn io(context: impl fmt::Display, err: impl fmt::Display) -> Self {
        Failure::Io(format!("{context}: {err}"))
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Io(m) => f.write_str(m),
        }
    }
}

impl From<CodecError> for Failure {
    fn from(err: CodecError) -> Self {
        match err {
            CodecError::Io(_) => Failure::Io(err.to_string()),
            _ => Failure::Data(err.to_string()),
        }
    }
}

impl From<HashError> for Failure {
    fn from(err: HashError) -> Self {
        match err {
            HashError::Codec(inner) => inner.into(),
            HashError::UnknownStrategy(_)
            | HashError::NotPerfectSquare(_)
            | HashError::InvalidWidth(_) => Failure::Usage(err.to_string()),
            _ => Failure::Data(err.to_string()),
        }
    }
}

impl From<IndexError> for Failure {
    fn from(err: IndexError) -> Self {
        match err {
            IndexError::Hash(inner) => inner.into(),
            IndexError::Io(_) => Failure::Io(err.to_string()),
            ref e if e.is_format_error() => Failure::Io(err.to_string()),
            IndexError::InvalidWindow { .. } | IndexError::DistanceOutOfRange { .. } => {
                Failure::Usage(err.to_string())
            }
            _ => Failure::Data(err.to_string()),
        }
    }
}

impl From<SimError> for Failure {
    fn from(err: SimError) -> Self {
        match err {
            SimError::Hash(inner) => inner.into(),
            SimError::UnknownGroup(_) | SimError::InvalidConfig(_) => {
                Failure::Usage(err.to_string())
            }
        }
    }
}

impl From<io::Error> for Failure {
    fn from(err: io::Error) -> Self {
        Failure::Io(err.to_string())
    }
}
