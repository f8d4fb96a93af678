//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("potential is not finite at the queried point (f + g = {value})")]
    NonFinitePotential { value: f64 },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("rejection sampler gave up after {attempts} attempts")]
    OracleFailure { attempts: u64 },

    #[error(
        "quadrature did not converge: best log-integral {best_log_integral}, \
         achieved relative tolerance {achieved_rel_tol:e} after {subdivisions} subdivisions"
    )]
    QuadratureNonConvergence {
        best_log_integral: f64,
        achieved_rel_tol: f64,
        subdivisions: usize,
    },

    #[error("density is not log-concave: {0}")]
    NotLogConcave(String),

    #[error(
        "grid range does not cover the target mass: half-width of at least \
         {required_half_width} around the dissipativity center is required"
    )]
    RangeCoverage { required_half_width: f64 },

    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    #[error("sampler failed at step {step}: {source}")]
    StepFailure {
        step: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn at_step(self, step: u64) -> Error {
        Error::StepFailure {
            step,
            source: Box::new(self),
        }
    }
}
