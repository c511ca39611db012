//! Round circles of radius c·L in flats through a point at depth L of the SL₃(Z) cusp.

use flatlab_geometry::{GroupElement, Mat};
use flatlab_reduction::ReductionOptions;
use flatlab_shadows::{sample_group_ball, SeededStream};
use rayon::prelude::*;

use crate::error::ExperimentError;
use crate::heatmap::grid_vector;
use crate::hp::{HpFrame, ReducedPoint};
use crate::moment::deep_basepoint;

/// Number of draws of g; the one with the smallest maximum is kept.
pub const SPHERE_DRAWS: usize = 20;
pub const MIN_DEPTH: f64 = 4.0;

#[derive(Clone, Debug, PartialEq)]
pub struct SphereParams {
    pub depth_l: f64,
    /// Minimum number of points; the circle is never sampled more sparsely than unit spacing.
    pub samples_on_sphere: usize,
    /// Radius factor: the circle has radius c·L.
    pub c: f64,
    /// Exponent of the moment integral.
    pub b: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SphereResult {
    pub max_excursion: f64,
    pub moment_integral: f64,
    pub sphere_center_excursion: f64,
    /// Index of the kept draw and the maxima of all draws, in draw order.
    pub chosen_draw: usize,
    pub draw_maxima: Vec<f64>,
    pub excursions: Vec<f64>,
}

/// Excursions around the circle of radius `radius` in the flat [base·exp(diag v)], walked in
/// order so each reduction starts from the previous transform.
pub fn circle_excursions(
    base: &[&Mat<f64>],
    radius: f64,
    samples: usize,
    opts: &ReductionOptions,
) -> Result<Vec<f64>, ExperimentError> {
    let mut warm: Option<ReducedPoint> = None;
    let mut out = Vec::with_capacity(samples);
    for k in 0..samples {
        let theta = std::f64::consts::TAU * k as f64 / samples as f64;
        let v = grid_vector(radius * theta.cos(), radius * theta.sin());
        let p = ReducedPoint::reduce(&HpFrame::product(base, &v), warm.as_ref().map(|w| &w.u))?;
        out.push(p.excursion(opts)?.value);
        warm = Some(p);
    }
    Ok(out)
}

/// Runs the circle in [h₀·g·A] for the h₀ of depth L down the deepest cusp ray.
pub fn cusp_sphere_experiment(
    params: &SphereParams,
    stream: &SeededStream,
    opts: &ReductionOptions,
) -> Result<SphereResult, ExperimentError> {
    sphere_at(&deep_basepoint(3, params.depth_l), params, stream, opts)
}

/// Same construction around an arbitrary centre h₀.
pub fn sphere_at(
    h0: &GroupElement<f64>,
    params: &SphereParams,
    stream: &SeededStream,
    opts: &ReductionOptions,
) -> Result<SphereResult, ExperimentError> {
    let SphereParams { depth_l, samples_on_sphere, c, b } = *params;
    if h0.matrix().n() != 3 {
        return Err(ExperimentError::Precondition("cusp spheres need n = 3".into()));
    }
    if !(depth_l >= MIN_DEPTH) || !depth_l.is_finite() {
        return Err(ExperimentError::Precondition(format!("depth_L = {depth_l} must be at least {MIN_DEPTH}")));
    }
    if samples_on_sphere == 0 {
        return Err(ExperimentError::Precondition("samples_on_sphere must be positive".into()));
    }
    if !(c > 0.0) || !c.is_finite() || !(b >= 0.0) || !b.is_finite() {
        return Err(ExperimentError::Precondition(format!("need c > 0 and b ≥ 0, got c = {c}, b = {b}")));
    }
    let points = samples_on_sphere.max((std::f64::consts::TAU * c * depth_l).ceil() as usize);
    let draws: Vec<Result<(GroupElement<f64>, Vec<f64>), ExperimentError>> = (0..SPHERE_DRAWS)
        .into_par_iter()
        .map(|k| {
            let g = sample_group_ball(3, &mut stream.child(k as u64).rng());
            let e = circle_excursions(&[h0.matrix(), g.matrix()], c * depth_l, points, opts)?;
            Ok((g, e))
        })
        .collect();
    let draws: Vec<(GroupElement<f64>, Vec<f64>)> = draws.into_iter().collect::<Result<_, _>>()?;
    let draw_maxima: Vec<f64> = draws.iter().map(|(_, e)| e.iter().cloned().fold(f64::NEG_INFINITY, f64::max)).collect();
    let chosen = (0..SPHERE_DRAWS).min_by(|&i, &j| draw_maxima[i].total_cmp(&draw_maxima[j])).expect("draws");
    let (g, excursions) = &draws[chosen];
    let moment = excursions.iter().map(|d| (b * d).exp()).sum::<f64>() / excursions.len() as f64;
    let centre = ReducedPoint::reduce(&HpFrame::product(&[h0.matrix(), g.matrix()], &[0.0; 3]), None)?.excursion(opts)?.value;
    Ok(SphereResult {
        max_excursion: draw_maxima[chosen],
        moment_integral: moment,
        sphere_center_excursion: centre,
        chosen_draw: chosen,
        draw_maxima,
        excursions: excursions.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shallow_depth_is_rejected() {
        let p = SphereParams { depth_l: 2.0, samples_on_sphere: 10, c: 1.0, b: 0.5 };
        let r = cusp_sphere_experiment(&p, &SeededStream::new(1, 0), &ReductionOptions::default());
        assert!(matches!(r, Err(ExperimentError::Precondition(_))));
    }

    #[test]
    fn circle_in_the_model_flat_matches_direct_reduction() {
        let opts = ReductionOptions::default();
        let id = Mat::identity(3);
        let walked = circle_excursions(&[&id], 9.0, 12, &opts).unwrap();
        for (k, w) in walked.iter().enumerate() {
            let theta = std::f64::consts::TAU * k as f64 / 12.0;
            let v = grid_vector(9.0 * theta.cos(), 9.0 * theta.sin());
            let direct = crate::hp::excursion_at(&[&id], &v, &opts).unwrap();
            assert!((w - direct).abs() < 1e-9, "{w} vs {direct}");
        }
    }
}
