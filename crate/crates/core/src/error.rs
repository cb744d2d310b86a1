//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// The per-momentum fixed-point system is singular or too ill-conditioned
    /// to solve; the momentum sits at or near a pole of the covariance symbol.
    #[error("singular fixed-point system at quasi-momentum {phi:?} (condition number {cond:.3e})")]
    Singular { phi: num_complex::Complex64, cond: f64 },

    /// Bosonic drift spectrum has eigenvalues with negative real part on the
    /// sampled grid; the dynamics pumps energy in and has no steady state.
    #[error("unstable bosonic dynamics: Re beta < 0 at {} grid momenta (first: phi = {})", momenta.len(), momenta.first().copied().unwrap_or(f64::NAN))]
    Unstable { momenta: Vec<f64> },

    /// No pole of the covariance symbol inside the searched strip.
    #[error("no pole of the covariance symbol with |Im phi| <= {im_cap}")]
    NoPoles { im_cap: f64 },

    /// A power-law fit could not be performed on the sweep data.
    #[error("degenerate exponent fit: {0}")]
    FitDegenerate(String),

    /// Correlation blocks truncated at r_max are not yet negligible.
    #[error("correlation tail at |r| = {r_max} has norm {tail:.3e}, above tolerance {tol:.3e}")]
    TailTooFat { r_max: i64, tail: f64, tol: f64 },

    /// A covariance restriction that must be positive definite is not.
    #[error("covariance matrix is not positive definite (min eigenvalue {min_eig:.3e})")]
    NotPositive { min_eig: f64 },

    /// The Liouvillian kernel is more than one-dimensional; the steady state
    /// is not unique at this system size.
    #[error("degenerate Liouvillian kernel: steady state not unique")]
    DegenerateKernel,

    /// Two results refer to different particle statistics.
    #[error("statistics mismatch: {0}")]
    StatisticsMismatch(String),

    /// Model validation failed.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// Malformed configuration input.
    #[error("config error: {0}")]
    Config(String),

    /// An argument violated an operation's preconditions.
    #[error("invalid argument: {0}")]
    InvalidArg(String),

    /// Numerical consistency check failed inside the pipeline.
    #[error("numerical check failed: {0}")]
    Numeric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
