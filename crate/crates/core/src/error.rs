use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("time increment must be positive, got {0}")]
    NonPositiveStep(f64),

    #[error(
        "state does not decay at the grid boundary: |psi| = {left:.3e} (left), {right:.3e} (right) \
         against max {max:.3e}"
    )]
    BoundaryViolation { left: f64, right: f64, max: f64 },

    #[error("state contains non-finite amplitudes")]
    NonFinite,

    #[error("state has zero norm")]
    ZeroNorm,

    #[error("grid cannot resolve the sampled kernel phase: step {phase_step:.3} rad exceeds pi")]
    Unresolved { phase_step: f64 },

    #[error("variant not supported here: {0}")]
    NonAdmissible(String),

    #[error("contradictory propagator configuration: {0}")]
    Contradictory(String),

    #[error("tridiagonal solve broke down at row {row}")]
    SolverBreakdown { row: usize },

    #[error("explicit diffusion step unstable: D*eps/dx^2 = {ratio:.3} exceeds 1/2")]
    Unstable { ratio: f64 },

    #[error("candidate range does not bracket the zero of the norm drift")]
    NoBracket,

    #[error("too few particles for a histogram comparison: {0} < 10000")]
    TooFewParticles(usize),

    #[error("regularized quadrature invalid: {0}")]
    Quadrature(String),
}
