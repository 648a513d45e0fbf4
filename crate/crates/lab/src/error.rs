use thiserror::Error;

pub type Result<T, E = LabError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum LabError {
    #[error(transparent)]
    Core(#[from] nls_core::Error),

    /// `defect = 2/q + d/r − d/2`; zero for admissible pairs.
    #[error("(q, r) = ({q}, {r}) is not L²-admissible in d = {dim}: 2/q + d/r − d/2 = {defect:e}")]
    Inadmissible { q: f64, r: f64, dim: usize, defect: f64 },

    #[error("invalid input: {0}")]
    Invalid(String),
}

impl LabError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        LabError::Invalid(msg.into())
    }

    /// Whether the underlying failure is a non-finite solver state.
    pub fn is_numerical_abort(&self) -> bool {
        matches!(self, LabError::Core(nls_core::Error::NumericalAbort { .. }))
    }
}
