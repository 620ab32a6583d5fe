use std::fmt;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, CoreError>;

/// Errors raised by constructors and serialization in this crate.
#[derive(Debug)]
pub enum CoreError {
    /// A value violates a documented precondition.
    InvalidArgument(String),
    /// A pixel lookup fell outside a stored ray table.
    OutsideRayTable { pixel: [f64; 2] },
    /// Malformed bytes while decoding a binary file.
    Format(String),
    Io(std::io::Error),
}

impl fmt::Display for CoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreError::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            CoreError::OutsideRayTable { pixel } => {
                write!(f, "pixel ({}, {}) outside stored ray table", pixel[0], pixel[1])
            }
            CoreError::Format(msg) => write!(f, "format error: {msg}"),
            CoreError::Io(err) => write!(f, "io error: {err}"),
        }
    }
}

impl std::error::Error for CoreError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            CoreError::Io(err) => Some(err),
            _ => None,
        }
    }
}

impl From<std::io::Error> for CoreError {
    fn from(err: std::io::Error) -> Self {
        CoreError::Io(err)
    }
}

/// Shorthand for an [`CoreError::InvalidArgument`] with a formatted message.
pub fn invalid(msg: impl Into<String>) -> CoreError {
    CoreError::InvalidArgument(msg.into())
}
