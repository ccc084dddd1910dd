use thiserror::Error;

/// Errors raised by the model, solvers and simulators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A model or solver parameter is outside its admissible range.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// An argument (adoption level, state, count) lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested quantity is not defined for this instance (e.g. no interior equilibrium).
    #[error("not applicable: {0}")]
    NotApplicable(String),

    /// A ratio or objective degenerates (zero denominator and similar).
    #[error("degenerate instance: {0}")]
    Degenerate(String),

    /// The integrator left the state simplex by more than the clamping slack.
    #[error("numerical failure: {0}")]
    Numerical(String),
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
