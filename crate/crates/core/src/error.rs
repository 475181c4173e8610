use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Operands live in different groups.
    KindMismatch,
    /// Determinant or unitarity defect above tolerance.
    NotInGroup { defect: f64 },
    LetterOutOfRange { generator: usize, available: usize },
    /// A configured resource cap would be exceeded.
    CapExceeded { what: &'static str, needed: u128, cap: u128 },
    InvalidInput(String),
    /// Ping-pong search exhausted its budget. This is not a proof of non-freeness.
    NoCertificate { explored: usize },
    /// The requested scale is finer than the net resolves.
    Unresolvable { delta: f64, min_delta: f64 },
    /// Densest bucket of the escape construction has a single element.
    SingletonBucket { buckets: usize },
    NotConverged { what: &'static str, residual: f64 },
    Degenerate(&'static str),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::KindMismatch => write!(f, "group kinds differ"),
            Error::NotInGroup { defect } => {
                write!(f, "matrix is not in the group (defect {defect:e})")
            }
            Error::LetterOutOfRange { generator, available } => write!(
                f,
                "letter refers to generator {generator} but only {available} are registered"
            ),
            Error::CapExceeded { what, needed, cap } => {
                write!(f, "{what}: {needed} exceeds cap {cap}")
            }
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::NoCertificate { explored } => write!(
                f,
                "no ping-pong certificate found after {explored} candidates (freeness not certified)"
            ),
            Error::Unresolvable { delta, min_delta } => write!(
                f,
                "scale {delta} is below the resolvable scale {min_delta} of the net"
            ),
            Error::SingletonBucket { buckets } => write!(
                f,
                "densest bucket is a singleton among {buckets} buckets; increase ell or the bucket resolution"
            ),
            Error::NotConverged { what, residual } => {
                write!(f, "{what} did not converge (residual {residual:e})")
            }
            Error::Degenerate(what) => write!(f, "degenerate input: {what}"),
        }
    }
}

impl core::error::Error for Error {}
