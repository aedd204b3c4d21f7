use thiserror::Error;

/// Errors surfaced by the library.
///
/// `Domain` means the caller handed us inputs outside an operation's
/// precondition (empty arm set, mismatched dimensions, parameters out of
/// range). `Numeric` means the inputs were admissible but a numerical
/// routine could not finish the job (singular Gram matrix, LP that never
/// reached optimality, overflowing budget exponent).
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numeric error: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}
