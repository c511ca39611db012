use flatlab_geometry::GeometryError;
use flatlab_reduction::ReductionError;
use flatlab_shadows::ShadowError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    /// Invalid parameters; nothing is computed.
    #[error("precondition: {0}")]
    Precondition(String),
    /// An enumeration ran out of budget.
    #[error("budget exhausted: {0}")]
    Budget(String),
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
    #[error("precision: {0}")]
    Precision(String),
    #[error(transparent)]
    Reduction(ReductionError),
    #[error(transparent)]
    Shadow(#[from] ShadowError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

impl From<ReductionError> for ExperimentError {
    fn from(e: ReductionError) -> Self {
        match e {
            ReductionError::Budget { .. } => ExperimentError::Budget(e.to_string()),
            ReductionError::Precondition(msg) => ExperimentError::Precondition(msg),
            other => ExperimentError::Reduction(other),
        }
    }
}

impl ExperimentError {
    pub fn is_budget(&self) -> bool {
        matches!(self, ExperimentError::Budget(_))
    }
}
