use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: String,
        actual: String,
    },

    #[error("domain error: {0}")]
    Domain(String),

    /// The stacked per-stage gain system of the coupled Riccati recursion is
    /// numerically singular at this stage.
    #[error("stacked gain system singular at stage {stage} (condition number {condition:.3e})")]
    SingularStageSystem { stage: usize, condition: f64 },

    #[error("state diverged at stage {stage} (norm {norm:.3e})")]
    Divergence { stage: usize, norm: f64 },

    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),
}

impl Error {
    pub(crate) fn dim(context: &'static str, expected: impl ToString, actual: impl ToString) -> Self {
        Error::Dimension {
            context,
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }
}
