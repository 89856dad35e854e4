use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid {field}: {reason}")]
    Invalid { field: String, reason: String },

    #[error("{what} index {index} out of range (size {len})")]
    OutOfBounds {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("capacity exceeded: {what} requires {required} amplitudes (limit {limit})")]
    Capacity {
        what: String,
        required: u128,
        limit: u128,
    },

    #[error("singular input: {0}")]
    Singular(String),

    #[error("numerical collapse: {0}")]
    Collapse(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

/// Coarse failure classes used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Capacity,
    Numerical,
}

impl Error {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Invalid { .. } | Error::OutOfBounds { .. } | Error::Unsupported(_) => {
                ErrorClass::Validation
            }
            Error::Capacity { .. } => ErrorClass::Capacity,
            Error::Singular(_) | Error::Collapse(_) => ErrorClass::Numerical,
        }
    }
}
