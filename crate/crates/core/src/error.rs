use thiserror::Error;

/// Errors raised by the numerical routines.
///
/// The variants split into two families: precondition failures (the caller
/// passed something outside an operation's domain) and numerical or resource
/// failures (the inputs were valid but the computation could not complete).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error in {op}: {msg}")]
    Domain { op: &'static str, msg: String },

    #[error("lookup error: point {point:?} is not in the tabulated site set")]
    Lookup { point: Vec<f64> },

    #[error("coverage error in {op}: {msg}")]
    Coverage { op: &'static str, msg: String },

    #[error("covariance matrix is not positive semidefinite: eigenvalue {eigenvalue:.6e} below jitter floor {floor:.3e}")]
    Covariance { eigenvalue: f64, floor: f64 },

    #[error("resource cap exceeded in {op}: need {needed}, cap {cap}")]
    Resource {
        op: &'static str,
        needed: usize,
        cap: usize,
    },

    #[error("path generation failed: {0}")]
    Generation(String),

    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("overflow in {op}; use the log-domain variant")]
    Overflow { op: &'static str },
}

impl Error {
    pub(crate) fn domain(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Domain {
            op,
            msg: msg.into(),
        }
    }

    /// True for errors caused by inputs outside an operation's preconditions.
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            Error::Domain { .. } | Error::Lookup { .. } | Error::Coverage { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
