use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A point lies inside the pole margin of the spherical chart.
    #[error("chart error: {0}")]
    Chart(String),
    /// An argument violates an operation's precondition.
    #[error("domain error: {0}")]
    Domain(String),
    /// The ODE integrator could not reach the requested time.
    #[error("integration failed: {0}")]
    Integration(String),
    /// The operation is not available for the requested surface or input.
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// Cyclic Jacobi sweeps hit the iteration cap.
    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off:e})")]
    NoConvergence { sweeps: usize, off: f64 },
    /// Sample arrays do not match the quadrature grid they are used with.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    /// A configuration record failed validation.
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
