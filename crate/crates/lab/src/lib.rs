//! Experiment driver: configuration, sweep execution, and report emission
//! for the regularized degenerate-diffusion laboratory.

pub mod config;
pub mod report;
pub mod sweep;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error("field error: {0}")]
    Field(#[from] plaplab_core::fields::FieldError),
    #[error("solver error: {0}")]
    Solver(#[from] plaplab_core::solver::SolverError),
    #[error("functional error: {0}")]
    Functional(#[from] plaplab_core::functionals::FunctionalError),
    #[error("oracle error: {0}")]
    Oracle(#[from] plaplab_core::oracles::OracleError),
    #[error("exponent error: {0}")]
    Exponent(#[from] plaplab_core::exponents::ExponentError),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl LabError {
    /// Process exit code: 2 config, 3 solver, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Solver(_) => 3,
            LabError::Io(_) | LabError::Csv(_) => 4,
            _ => 2,
        }
    }
}
