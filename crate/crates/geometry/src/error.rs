use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("not an element of SL_n(R): {0}")]
    NotGroupElement(String),
    #[error("not a unit-determinant SPD form: {0}")]
    Domain(String),
    #[error("invalid Cartan vector: {0}")]
    Cartan(String),
    #[error("invalid flag: {0}")]
    Flag(String),
    #[error("invalid boundary direction: {0}")]
    Direction(String),
    #[error("flags are not opposite (subspace index {index} meets its complement)")]
    NotOpposite { index: usize },
    #[error("ill-conditioned frame (condition number {cond:.3e})")]
    Conditioning { cond: f64 },
}
