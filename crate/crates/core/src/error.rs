use thiserror::Error;

/// Failures raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("layout error: {0}")]
    Layout(String),

    #[error("key {key} out of range for a family of {family_size} unitaries")]
    Key { key: usize, family_size: usize },

    #[error("invalid tag: {0}")]
    InvalidTag(String),

    #[error("{routine} did not converge (max {max_iterations} iterations, dimension {dim})")]
    NonConvergence {
        routine: &'static str,
        max_iterations: usize,
        dim: usize,
    },

    #[error(
        "unitary has an eigenphase within {distance:.3e} of -pi; principal logarithm is ambiguous"
    )]
    DegenerateBranch { distance: f64 },

    #[error("sweep at s={s} for key {key}: eigenphase within {distance:.3e} of -pi")]
    SweepBranch { key: usize, s: f64, distance: f64 },

    #[error("family too small: {0}")]
    InsufficientFamily(String),

    #[error("degenerate family: {0}")]
    DegenerateFamily(String),

    #[error("generation failed after {attempts} attempts: {last_report}")]
    Generation {
        attempts: usize,
        last_report: String,
    },

    #[error("internal consistency error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
