//! Tail of the cusp excursion of y = h·g·a for g drawn from the unit group ball.

use flatlab_geometry::{CartanVector, GroupElement};
use flatlab_reduction::ReductionOptions;
use flatlab_shadows::{sample_group_ball, SeededStream};
use rayon::prelude::*;

use crate::error::ExperimentError;
use crate::fit::least_squares;
use crate::hp::excursion_at;

/// Rows with fewer exceedances than this are left out of the exponential fit.
pub const MIN_FIT_COUNT: u64 = 20;
pub const MIN_SAMPLES: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct TailRow {
    pub s: f64,
    pub count_exceed: u64,
    pub total: u64,
    pub p_hat: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TailTable {
    pub rows: Vec<TailRow>,
    /// Decay rate Â = −slope of log p̂ against s; None when fewer than two rows qualify.
    pub a_hat: Option<f64>,
    pub r2: Option<f64>,
    pub fit_rows: usize,
    /// Samples dropped because the enumeration budget ran out.
    pub excluded: u64,
}

/// Excursions of h·g_k·exp(a_norm·barycentric) for k < samples, with g_k drawn from child stream k.
/// Budget failures are returned as None.
pub fn tail_samples(
    h: &GroupElement<f64>,
    a_norm: f64,
    samples: usize,
    stream: &SeededStream,
    opts: &ReductionOptions,
) -> Result<Vec<Option<f64>>, ExperimentError> {
    if !(a_norm >= 0.0) || !a_norm.is_finite() {
        return Err(ExperimentError::Precondition(format!("a_norm = {a_norm} must be a finite nonnegative number")));
    }
    let n = h.matrix().n();
    let a = CartanVector::barycentric(n).scale(a_norm);
    (0..samples)
        .into_par_iter()
        .map(|k| {
            let g = sample_group_ball(n, &mut stream.child(k as u64).rng());
            match excursion_at(&[h.matrix(), g.matrix()], a.coords(), opts) {
                Ok(v) => Ok(Some(v)),
                Err(e) if e.is_budget() => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect()
}

pub fn tail_experiment(
    h: &GroupElement<f64>,
    a_norm: f64,
    s_grid: &[f64],
    samples: usize,
    stream: &SeededStream,
    opts: &ReductionOptions,
) -> Result<TailTable, ExperimentError> {
    if samples < MIN_SAMPLES {
        return Err(ExperimentError::Precondition(format!("samples = {samples} is below {MIN_SAMPLES}")));
    }
    let values = tail_samples(h, a_norm, samples, stream, opts)?;
    let kept: Vec<f64> = values.iter().flatten().copied().collect();
    Ok(tail_table(&kept, s_grid, (samples - kept.len()) as u64))
}

/// Exceedance counts and the exponential fit for a set of excursions.
pub fn tail_table(values: &[f64], s_grid: &[f64], excluded: u64) -> TailTable {
    let total = values.len() as u64;
    let rows: Vec<TailRow> = s_grid
        .iter()
        .map(|&s| {
            let count = values.iter().filter(|&&v| v > s).count() as u64;
            let p = if total > 0 { count as f64 / total as f64 } else { f64::NAN };
            TailRow { s, count_exceed: count, total, p_hat: p, stderr: (p * (1.0 - p) / total as f64).sqrt() }
        })
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        rows.iter().filter(|r| r.count_exceed >= MIN_FIT_COUNT).map(|r| (r.s, r.p_hat.ln())).unzip();
    let fit = least_squares(&xs, &ys);
    TailTable { a_hat: fit.map(|f| -f.slope), r2: fit.map(|f| f.r2), fit_rows: xs.len(), rows, excluded }
}
