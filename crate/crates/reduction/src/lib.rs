//! Cusp excursion d_Γ(g) = min_γ d([e], [γg]) for Γ = SL_n(Z), n = 2..4.
//!
//! The orbit Γ·[g] corresponds to the unimodular lattice spanned by the rows of g. Short vectors
//! of that lattice (and of its dual) bound the excursion from below, a reduced basis bounds it
//! from above, and for n ≤ 3 the minimum is found exactly by enumeration.

pub mod cusp;
pub mod error;
pub mod int;
pub mod lattice;
pub mod thick;

pub use cusp::{
    cusp_excursion, cusp_excursion_of, cusp_excursion_point, upper_bound, upper_bound_of, water_fill, CuspExcursion, Input,
    ReductionOptions, CERTIFY_TOL,
};
pub use error::ReductionError;
pub use int::IntMat;
pub use lattice::{gram_schmidt, lagrange, lll, shortest_vector, LatticeBasis, Reduced, ShortVector, DEFAULT_BUDGET, LLL_DELTA};
pub use thick::{
    default_r0, in_thick, retract_frame, retract_thick, retract_thick_detailed, sample_siegel_core, Retraction, ThickParams,
    SIEGEL_T,
};
