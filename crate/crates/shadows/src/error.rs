use flatlab_geometry::GeometryError;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ShadowError {
    #[error("chamber is not opposite to the standard chamber (subspace index {index})")]
    NotOpposite { index: usize },
    #[error("matrix is not strictly upper triangular")]
    NotNilpotent,
    #[error("invalid density: {0}")]
    Density(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}
