use thiserror::Error;

/// Errors surfaced by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("Riccati iteration did not converge: residual {residual:.3e} after {iterations} iterations")]
    NonConvergence { residual: f64, iterations: usize },

    #[error("ill-conditioned linear system: {0}")]
    IllConditioned(String),

    #[error("matrix is not Schur-stable (spectral radius {rho:.6})")]
    UnstableMatrix { rho: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("regression map is rank deficient (B_m^T B_m numerically singular)")]
    RankDeficient,

    #[error("numerical breakdown in estimator update (nonpositive update denominator)")]
    NumericalBreakdown,

    #[error("projection did not converge after {0} iterations")]
    ProjectionNonConvergence(usize),

    #[error("estimated input-channel matrix is singular")]
    SingularThetaB,

    #[error("comparator identity violated at step {step}: residual {residual:.3e}")]
    IdentityViolation { step: usize, residual: f64 },

    #[error("analysis window too short: {len} steps, need at least {min}")]
    WindowTooShort { len: usize, min: usize },

    #[error("invalid loss-of-effectiveness vector: {0}")]
    InvalidLoe(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
