use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    /// A dimension or configuration invariant does not hold.
    #[error("invalid dimensions: {0}")]
    Dimension(String),
    /// Input length does not match what the operation expects.
    #[error("length mismatch: expected {expected}, got {actual}")]
    Length { expected: usize, actual: usize },
    /// A configuration file or command-line value could not be parsed.
    #[error("config error: {0}")]
    Config(String),
    /// A numeric argument is outside its domain.
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    /// A results file does not follow the expected CSV layout.
    #[error("malformed data: {0}")]
    Format(String),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        if e.is_io_error() {
            match e.into_kind() {
                csv::ErrorKind::Io(io) => Error::Io(io),
                other => Error::Format(format!("{other:?}")),
            }
        } else {
            Error::Format(e.to_string())
        }
    }
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
        if expected == actual {
            Ok(())
        } else {
            Err(Error::Length { expected, actual })
        }
    }
}
