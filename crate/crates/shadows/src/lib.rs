//! Shadows of points on the chambers opposite to the standard chamber z, and seeded smooth
//! sampling of chambers and group elements.
//!
//! A chamber c opposite to z is c = n·z* for a unique unipotent upper-triangular n. The shadow
//! distance d_x(c) = ‖log n‖ measured from x = [g], g ∈ NA, is ‖ι(g⁻¹c)‖, and the r-shadow S_x(r) is
//! the set of chambers with d_x(c) < r.

pub mod error;
pub mod sampling;
pub mod shadow;
pub mod stream;

pub use error::ShadowError;
pub use sampling::{
    bump_radius_quantile, sample_bump, sample_chamber, sample_chamber_opposite, sample_group_ball,
    sample_group_ball_with, sample_unipotent, wall_distance, ChamberDensity, OppositeDraw, DEFAULT_SMOOTHNESS, WALL_TOL,
};
pub use shadow::{in_shadow, iota, log_unipotent, shadow_distance, UnipotentCoord};
pub use stream::SeededStream;

pub type Unipotent = UnipotentCoord<f64>;
