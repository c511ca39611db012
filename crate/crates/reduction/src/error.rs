use flatlab_geometry::GeometryError;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReductionError {
    #[error("enumeration budget of {budget} nodes exhausted")]
    Budget { budget: u64 },
    #[error("integer overflow in lattice transform")]
    Overflow,
    #[error("lattice too ill-conditioned for double precision (lower bound {lower} exceeds value {upper})")]
    Conditioning { lower: f64, upper: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}
