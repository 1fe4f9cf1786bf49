use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid mode n={n}: {reason}")]
    InvalidMode { n: i32, reason: &'static str },

    #[error("non-finite value {what} at r={r}, theta={theta}")]
    NonFinite { what: &'static str, r: f64, theta: f64 },

    #[error("radius {r} outside grid range [1, {r_max}]")]
    OutOfRange { r: f64, r_max: f64 },

    #[error("{what}: integral over [r_max, inf) diverges (fitted decay rate {rate:.4}, kernel rate {kernel:.4})")]
    DivergentIntegral {
        what: &'static str,
        rate: f64,
        kernel: f64,
    },

    #[error("mode {n}: d_n calibration failed, |d_n| = {residual:.3e} > {tol:.3e}")]
    Calibration { n: i32, residual: f64, tol: f64 },

    #[error("mode {n}: {source}")]
    Mode {
        n: i32,
        #[source]
        source: Box<Error>,
    },

    #[error("Picard iteration diverged after {iterations} iterations (last difference {last_diff:.3e})")]
    Divergence { iterations: usize, last_diff: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(&'static str),

    #[error("singular linear system in {0}")]
    Singular(&'static str),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn in_mode(self, n: i32) -> Self {
        match self {
            e @ Error::Mode { .. } => e,
            e => Error::Mode { n, source: Box::new(e) },
        }
    }

    /// True when the failure is the fixed-point loop running away rather than a
    /// numerical fault inside a single solve.
    pub fn is_divergence(&self) -> bool {
        matches!(self, Error::Divergence { .. })
    }
}
