//! Linear-algebra model of the symmetric space X = SL_n(R)/SO(n) for n = 2..4.
//!
//! Points are unit-determinant SPD forms g·gᵀ, the metric is
//! d(P, Q) = ½‖log eig(P⁻¹Q)‖₂, chambers at infinity are complete flags and
//! maximal flats are frames h with the flat {[h·exp(diag v)]}.
//!
//! Everything is generic over [`Real`] (f32 or f64); the aliases below fix f64.

pub mod error;
pub mod flag;
pub mod mat;
pub mod scalar;
pub mod space;

pub use error::GeometryError;
pub use flag::{
    closest_point_on_flat, cone_distance, exp_map, flat_spanned, flat_through, flat_through_with_coord,
    minimize_over_flat, opposite, opposition_failure, relative_position, tits_angle, BoundaryDirection, Flag,
    FlatFrame,
};
pub use mat::{Mat, Svd, MAX_N};
pub use scalar::Real;
pub use space::{
    cartan_distance, frame_distance, geodesic, iwasawa_na, log_sv_norm, log_sv_norm_of, CartanVector, GroupElement,
    Iwasawa, SpacePoint,
};

pub type Matrix = Mat<f64>;
pub type Group = GroupElement<f64>;
pub type Point = SpacePoint<f64>;
pub type Cartan = CartanVector<f64>;
pub type Chamber = Flag<f64>;
pub type Direction = BoundaryDirection<f64>;
pub type Flat = FlatFrame<f64>;
