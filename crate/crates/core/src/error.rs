use thiserror::Error;

/// Errors raised by the analytic and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter violated its domain constraint.
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    /// Both states of a discrete-time source are absorbing.
    #[error("steady state undefined: p11 = p22 = 1 makes both source states absorbing")]
    UndefinedSteadyState,

    /// A closed form produced a value outside its mathematical domain.
    #[error("numeric failure in {context}: {detail}")]
    Numeric { context: &'static str, detail: String },

    /// The effective-bandwidth inversion has no real solution.
    #[error("infeasible rate matching: {0}")]
    Infeasible(String),

    /// Mean arrival rate is not below mean service rate.
    #[error(
        "unstable queue: mean arrival rate {lambda_avg:.6} bits/block is not below \
         mean service rate {mean_service:.6} bits/block"
    )]
    Unstable { lambda_avg: f64, mean_service: f64 },

    /// A bracketing solver exhausted its iteration budget.
    #[error("solver did not converge after {iterations} iterations; last bracket [{lo}, {hi}]")]
    NoConvergence { lo: f64, hi: f64, iterations: usize },

    /// Finite-difference step is too small for double precision.
    #[error("finite-difference step {h:e} is below the cancellation limit {min:e}")]
    StepTooSmall { h: f64, min: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field,
        reason: reason.into(),
    }
}
