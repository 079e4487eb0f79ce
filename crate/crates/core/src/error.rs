use alloc::string::String;
use core::fmt;

/// Errors raised by the algorithms in this crate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Error {
    /// Operands do not fit together (variable counts, component counts).
    Structural(String),
    /// Arguments are outside the domain of the operation.
    Domain(String),
    /// The map lacks something the operation needs (inverse, closed form).
    Capability(String),
    /// An orbit left the finite domain. `last_finite` is the signed index of
    /// the last iterate that was still finite.
    Escape { last_finite: i64 },
    /// Too few usable samples for a fit.
    InsufficientData { usable: usize, required: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Structural(msg) => write!(f, "structural error: {msg}"),
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Capability(msg) => write!(f, "capability error: {msg}"),
            Error::Escape { last_finite } => {
                write!(f, "orbit escaped after iterate {last_finite}")
            }
            Error::InsufficientData { usable, required } => write!(
                f,
                "insufficient data: {usable} usable points, {required} required"
            ),
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn structural(msg: impl Into<String>) -> Error {
    Error::Structural(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn capability(msg: impl Into<String>) -> Error {
    Error::Capability(msg.into())
}
