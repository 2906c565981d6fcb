use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} must be {requirement}, got {value}")]
    Domain {
        name: &'static str,
        requirement: &'static str,
        value: f64,
    },

    #[error(
        "quadrature did not converge after {subdivisions} subdivisions \
         (estimate {estimate}, error estimate {error_estimate})"
    )]
    NonConvergence {
        estimate: f64,
        error_estimate: f64,
        subdivisions: usize,
    },

    #[error("integrand is not finite at x = {at}")]
    NonFinite { at: f64 },

    #[error("degenerate sample: {0}")]
    Degenerate(String),

    #[error("integrability condition violated: {0}")]
    Integrability(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("all {replications} replications failed for n = {n}; last error: {last}")]
    AllReplicationsFailed {
        n: usize,
        replications: usize,
        last: String,
    },
}

impl Error {
    /// True for failures of a numerical precondition (divergent functionals,
    /// unconverged quadrature) as opposed to malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. }
                | Error::NonFinite { .. }
                | Error::Integrability(_)
                | Error::AllReplicationsFailed { .. }
        )
    }
}

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::Domain {
            name,
            requirement: "positive and finite",
            value,
        })
    }
}

pub(crate) fn check_nonnegative(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(Error::Domain {
            name,
            requirement: "non-negative and finite",
            value,
        })
    }
}
