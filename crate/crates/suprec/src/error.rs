use thiserror::Error;

/// Errors produced by configuration validation, data-shape checks, and
/// numerically degenerate inputs.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates its documented constraints.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// Input data is malformed or dimensionally inconsistent.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Input is numerically degenerate (singular Gram matrix, asymmetric
    /// matrix beyond tolerance, ...).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// A sweep's estimated cost exceeds the configured operation budget.
    #[error("sweep budget exceeded: estimated {estimated:.3e} multiply-adds > budget {budget:.3e} (pass force to override)")]
    BudgetExceeded { estimated: f64, budget: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
