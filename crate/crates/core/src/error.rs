use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid state at t={t}: {reason}")]
    InvalidState { t: f64, reason: String },

    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical consistency violated: {quantity} = {value:e}")]
    NumericalConsistency { quantity: String, value: f64 },

    #[error("integration failed at t={t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("quadrature: {0}")]
    Quadrature(String),

    #[error("defective generator (defect {defect:e})")]
    DefectiveGenerator { defect: f64 },

    #[error("steady state not unique ({zero_modes} zero modes)")]
    NonUniqueSteadyState { zero_modes: usize },

    #[error("no connecting unitary: {0}")]
    NoConnectingUnitary(String),

    #[error("inconsistent input: {0}")]
    Inconsistent(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NumericalConsistency { .. }
                | Error::Integration { .. }
                | Error::DefectiveGenerator { .. }
                | Error::NonUniqueSteadyState { .. }
                | Error::Quadrature(_)
        )
    }

    /// Process exit code used by the CLI: 1 for validation, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        if self.is_numerical() {
            2
        } else {
            1
        }
    }

    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }
}
