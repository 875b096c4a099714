use std::path::PathBuf;

/// Errors raised by the numerical and simulation routines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("pole of the gamma function at x = {0}")]
    Pole(f64),

    #[error("series did not converge after {terms} terms (last relative change {last_change:e})")]
    Convergence { terms: usize, last_change: f64 },

    #[error("quadrature did not converge: estimate {estimate:e}, error estimate {error:e}")]
    Quadrature { estimate: f64, error: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("link is unusable: fading factor is zero")]
    UnusableLink,

    #[error("airtime {given:e} s is below the Shannon minimum {minimum:e} s")]
    AirtimeViolation { given: f64, minimum: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("point set is empty")]
    EmptyPointSet,

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
