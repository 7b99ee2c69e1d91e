use alloc::string::String;
use core::fmt;

/// Unified error type for the core library.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A vector with zero norm was passed where a direction is required.
    ZeroVector,
    /// A coordinate, weight, or parameter was NaN or infinite.
    NonFinite(&'static str),
    DimensionMismatch {
        expected: usize,
        got: usize,
    },
    InvalidParameter {
        name: &'static str,
        message: String,
    },
    /// The input collection was empty where at least one element is required.
    EmptyInput(&'static str),
    /// No holdout point fell inside the selector, so the conditional error
    /// estimate is undefined.
    EmptySelection,
    /// The conditioning event has zero probability mass.
    ZeroMassCondition,
    /// No family member has probability mass inside the requested band.
    InfeasibleBand {
        lo: f64,
        hi: f64,
    },
    /// A search finished with no surviving candidate.
    NoCandidates,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ZeroVector => write!(f, "cannot normalize a zero vector"),
            Error::NonFinite(what) => write!(f, "{what} must be finite"),
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::InvalidParameter { name, message } => {
                write!(f, "invalid parameter `{name}`: {message}")
            }
            Error::EmptyInput(what) => write!(f, "{what} must be non-empty"),
            Error::EmptySelection => {
                write!(f, "no sample point fell inside the selector; conditional error is undefined")
            }
            Error::ZeroMassCondition => {
                write!(f, "conditioning event has zero probability mass")
            }
            Error::InfeasibleBand { lo, hi } => {
                write!(f, "no hypothesis has mass inside the band [{lo}, {hi}]")
            }
            Error::NoCandidates => write!(f, "no candidate survived the search"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

/// Shorthand used throughout the crate.
pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, message: impl fmt::Display) -> Error {
    Error::InvalidParameter {
        name,
        message: alloc::format!("{message}"),
    }
}
