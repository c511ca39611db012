//! Numerical experiments on SL_n(R)/SO(n) modulo SL_n(Z).
//!
//! Every experiment takes a [`SeededStream`](flatlab_shadows::SeededStream) and derives one child
//! stream per sample, pixel or cell, so its output does not depend on the number of worker threads.

pub mod dehn;
pub mod dyadic;
pub mod error;
pub mod fit;
pub mod heatmap;
pub mod hp;
pub mod lmr;
pub mod moment;
pub mod sphere;
pub mod tail;

pub use error::ExperimentError;
pub use fit::{least_squares, mean_stderr, median, quantile, LinearFit};
pub use hp::{excursion_at, precision_for, reduced_point, HpFrame, IntTransform, ReducedPoint};
pub use tail::{tail_experiment, tail_samples, tail_table, TailRow, TailTable};
