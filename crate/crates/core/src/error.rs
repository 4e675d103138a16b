use thiserror::Error;

pub type Result<T> = std::result::Result<T, FormationError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormationError {
    /// An input lies outside the domain where an operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    /// Rejection sampling gave up before finding a state that satisfies the constraint.
    #[error("sampling error: no state satisfying {constraint} after {attempts} attempts")]
    Sampling { constraint: String, attempts: usize },

    #[error("state is not an equilibrium (control residual {residual:e} exceeds {tolerance:e})")]
    NotEquilibrium { residual: f64, tolerance: f64 },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    Asymmetric(f64),
}
