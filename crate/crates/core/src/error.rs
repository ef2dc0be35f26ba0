use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("denominator polynomial is identically zero")]
    ZeroDenominator,

    #[error("malformed polynomial: {0}")]
    MalformedPolynomial(String),

    #[error(
        "transfer function is improper (numerator degree {num} > denominator degree {den}); \
         factor derivative action out of the block before discretizing"
    )]
    Improper { num: usize, den: usize },

    #[error("transfer function has a pole on the evaluation frequency omega = {omega} rad/s")]
    PoleOnAxis { omega: f64 },

    #[error("polynomial root solve failed: {0}")]
    RootSolve(String),

    #[error("invalid frequency grid: {0}")]
    InvalidGrid(String),

    #[error("simulation diverged at step {step} (t = {time} s)")]
    Diverged { step: usize, time: f64 },

    #[error("non-finite controller input at step {step}")]
    NonFiniteInput { step: usize },

    #[error("signal error: {0}")]
    Signal(String),

    #[error("fit failed: {0}")]
    FitFailure(String),

    #[error("work loop error: {0}")]
    WorkLoop(String),
}

impl Error {
    pub(crate) fn param(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }

    /// True for errors produced by numerical breakdown rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::RootSolve(_)
                | Error::Diverged { .. }
                | Error::NonFiniteInput { .. }
                | Error::FitFailure(_)
                | Error::PoleOnAxis { .. }
        )
    }
}
