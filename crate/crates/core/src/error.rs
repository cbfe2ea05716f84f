use thiserror::Error;

/// Errors produced by the analytic, simulation and I/O layers.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Integration limits were given in the wrong order or are degenerate.
    #[error("invalid interval: {0}")]
    InvalidInterval(String),

    /// Adaptive quadrature hit its subdivision cap before reaching tolerance.
    #[error(
        "quadrature did not converge on [{lo}, {hi}]: estimate {estimate:e}, error {error:e} after {subdivisions} subdivisions"
    )]
    QuadratureNonConvergence {
        lo: f64,
        hi: f64,
        estimate: f64,
        error: f64,
        subdivisions: usize,
    },

    /// A configuration field failed validation.
    #[error("invalid config field `{field}`: {message}")]
    Config { field: String, message: String },

    /// A distribution curve does not carry enough probability mass.
    #[error("insufficient coverage: {0}")]
    InsufficientCoverage(String),

    /// Moment matching requires a strictly positive variance.
    #[error("non-positive variance: m2 - m1^2 = {0:e}")]
    NonPositiveVariance(f64),

    /// An empirical distribution was requested from zero samples.
    #[error("empty sample set")]
    EmptySamples,

    /// The simulation exhausted its attempt budget without keeping any realization.
    #[error("no realization retained after {attempts} attempts")]
    NoRetainedRealizations { attempts: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::QuadratureNonConvergence { .. } => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
