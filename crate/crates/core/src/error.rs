use thiserror::Error;

/// Errors raised by the beamforming library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("index {index} out of range (limit {limit}) for {what}")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        limit: usize,
    },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        got: String,
    },
    #[error("coincident user antenna and surface element (user {user}, antenna {antenna}, element {element})")]
    SingularGeometry {
        user: usize,
        antenna: usize,
        element: usize,
    },
    #[error("matrix is not Hermitian positive definite in {0}")]
    NotPositiveDefinite(&'static str),
    #[error("rank-one extraction failed: {0}")]
    Extraction(String),
    #[error("SDP solver did not converge after {iterations} iterations (primal {primal:.3e}, dual {dual:.3e}, gap {gap:.3e})")]
    SdpNotConverged {
        iterations: usize,
        primal: f64,
        dual: f64,
        gap: f64,
    },
    #[error("BCD iteration {iteration}: {source}")]
    Bcd {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
