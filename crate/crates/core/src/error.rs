use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter {name} = {value}: {rule}")]
    InvalidParameter { name: &'static str, value: f64, rule: &'static str },

    /// A closed-form expression was evaluated outside the phase where it holds.
    #[error("domain error in {what}: {detail}")]
    Domain { what: &'static str, detail: String },

    #[error("state dimension {got} does not match truncation dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NotConverged { what: &'static str, iterations: usize, residual: f64 },

    #[error("truncation cap exceeded: n_tr would reach {n_tr} > {cap}")]
    TruncationCap { n_tr: usize, cap: usize },

    /// Quadratic bosonic form without a stable set of normal modes.
    #[error("dynamical instability: {0}")]
    Instability(String),

    #[error("subspace is not closed under translation (leakage {leakage:.3e})")]
    NotSymmetric { leakage: f64 },

    #[error("scaling fit: {0}")]
    Fit(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("checkpoint format: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain { what, detail: detail.into() }
    }
}
