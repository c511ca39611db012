//! Exponential moments E[exp(b·d_Γ(h·g·a))] as a function of ‖a‖.

use flatlab_geometry::{GroupElement, Mat};
use flatlab_reduction::ReductionOptions;
use flatlab_shadows::SeededStream;

use crate::error::ExperimentError;
use crate::fit::{least_squares, mean_stderr, LinearFit};
use crate::tail::{tail_samples, MIN_SAMPLES};

/// Relative tolerance of the plateau test.
pub const PLATEAU_REL: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub struct MomentRow {
    pub a_norm: f64,
    pub mean: f64,
    pub stderr: f64,
    pub total: u64,
    pub excluded: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentTable {
    pub b: f64,
    pub rows: Vec<MomentRow>,
    /// Smallest ‖a‖ from which every later moment agrees with the last one.
    pub plateau: Option<f64>,
}

/// The same draws g_k are used for every ‖a‖, so the curve is smooth in ‖a‖.
pub fn moment_experiment(
    h: &GroupElement<f64>,
    b: f64,
    a_norms: &[f64],
    samples: usize,
    stream: &SeededStream,
    opts: &ReductionOptions,
) -> Result<MomentTable, ExperimentError> {
    if !(b >= 0.0) || !b.is_finite() {
        return Err(ExperimentError::Precondition(format!("b = {b} must be finite and nonnegative")));
    }
    if samples < MIN_SAMPLES {
        return Err(ExperimentError::Precondition(format!("samples = {samples} is below {MIN_SAMPLES}")));
    }
    if a_norms.is_empty() {
        return Err(ExperimentError::Precondition("a_norms is empty".into()));
    }
    let mut rows = Vec::with_capacity(a_norms.len());
    for &a in a_norms {
        let values = tail_samples(h, a, samples, stream, opts)?;
        let e: Vec<f64> = values.iter().flatten().map(|d| (b * d).exp()).collect();
        let (mean, stderr) = mean_stderr(&e);
        rows.push(MomentRow { a_norm: a, mean, stderr, total: e.len() as u64, excluded: (samples - e.len()) as u64 });
    }
    let plateau = plateau_threshold(&rows);
    Ok(MomentTable { b, rows, plateau })
}

/// First row after which all moments are within max(10%, 3 standard errors) of the last row.
pub fn plateau_threshold(rows: &[MomentRow]) -> Option<f64> {
    let last = rows.last()?;
    let close = |r: &MomentRow| {
        let tol = (PLATEAU_REL * last.mean).max(3.0 * (r.stderr.powi(2) + last.stderr.powi(2)).sqrt());
        (r.mean - last.mean).abs() <= tol
    };
    let mut start = rows.len() - 1;
    while start > 0 && close(&rows[start - 1]) {
        start -= 1;
    }
    Some(rows[start].a_norm)
}

/// h_R = exp(R·(1, 0, …, 0, −1)/√2), a point at distance R from [e] down the deepest cusp ray.
pub fn deep_basepoint(n: usize, r: f64) -> GroupElement<f64> {
    let mut v = vec![0.0; n];
    v[0] = r / 2f64.sqrt();
    v[n - 1] = -r / 2f64.sqrt();
    GroupElement::new(Mat::diag(&v.iter().map(|x| x.exp()).collect::<Vec<_>>())).expect("diagonal of determinant 1")
}

#[derive(Clone, Debug, PartialEq)]
pub struct Calibration {
    /// (R, plateau threshold) per basepoint depth.
    pub thresholds: Vec<(f64, f64)>,
    pub fit: Option<LinearFit>,
    /// Fitted slope b′ of the threshold against R.
    pub b_prime: Option<f64>,
}

/// Plateau thresholds at the basepoints h_R, fitted linearly in R.
pub fn calibrate_b_prime(
    n: usize,
    b: f64,
    depths: &[f64],
    a_norms: &[f64],
    samples: usize,
    stream: &SeededStream,
    opts: &ReductionOptions,
) -> Result<Calibration, ExperimentError> {
    let mut thresholds = Vec::new();
    for (i, &r) in depths.iter().enumerate() {
        let t = moment_experiment(&deep_basepoint(n, r), b, a_norms, samples, &stream.child(i as u64), opts)?;
        thresholds.push((r, t.plateau.expect("nonempty table")));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = thresholds.iter().copied().unzip();
    let fit = least_squares(&xs, &ys);
    Ok(Calibration { b_prime: fit.map(|f| f.slope), fit, thresholds })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_exponent_gives_unit_moments() {
        let t = moment_experiment(
            &GroupElement::identity(2),
            0.0,
            &[0.0, 2.0],
            100,
            &SeededStream::new(4, 0),
            &ReductionOptions::default(),
        )
        .unwrap();
        assert!(t.rows.iter().all(|r| r.mean == 1.0 && r.stderr == 0.0));
    }

    #[test]
    fn plateau_starts_where_the_curve_settles() {
        let row = |a: f64, m: f64| MomentRow { a_norm: a, mean: m, stderr: 0.0, total: 100, excluded: 0 };
        let rows = [row(0.0, 5.0), row(1.0, 2.0), row(2.0, 1.05), row(3.0, 1.0)];
        assert_eq!(plateau_threshold(&rows), Some(2.0));
    }
}
