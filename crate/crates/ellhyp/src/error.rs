//! Error type shared by all modules.

use num_complex::Complex64;

/// Errors produced by evaluation, quadrature, and solver routines.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An evaluation point came within the guard distance of a pole.
    #[error("pole proximity: {context} at z = {point}")]
    PoleProximity { context: String, point: Complex64 },

    /// Parameters fall outside the regime where the requested representation
    /// is defined (e.g. a derived base with modulus >= 1).
    #[error("invalid regime: {0}")]
    InvalidRegime(String),

    /// An integrand returned a non-finite value at a quadrature node.
    #[error("integrand failure at node {node}: {context}")]
    IntegrandFailure { context: String, node: Complex64 },

    /// A relation's coefficient denominator vanished (or nearly so).
    #[error("degenerate coefficient: {0}")]
    DegenerateCoefficient(String),

    /// Parameter balancing condition violated.
    #[error("balancing violated: {0}")]
    BalancingViolated(String),

    /// A transformed parameter set left the admissible annulus.
    #[error("inadmissible image: {0}")]
    InadmissibleImage(String),

    /// Rejection sampling exhausted its budget.
    #[error("sampling failure: {0}")]
    SamplingFailure(String),

    /// The Bethe root solver failed to converge from any seed.
    #[error("solver failure: {0}")]
    SolverFailure(String),

    /// Configuration or usage error (CLI layer).
    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
