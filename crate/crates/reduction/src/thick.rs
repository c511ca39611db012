//! Thick part X(r0) and the horoball-clamp retraction onto it.

use std::sync::OnceLock;

use flatlab_geometry::{frame_distance, Mat, SpacePoint, MAX_N};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cusp::{cusp_excursion_of, upper_bound_of, Input, ReductionOptions};
use crate::error::ReductionError;

/// Classical Siegel parameter for SL₂(Z).
pub const SIEGEL_T: f64 = 1.154_700_538_379_251_5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThickParams {
    pub r0: f64,
    pub siegel_t: f64,
}

impl ThickParams {
    pub fn new(r0: f64) -> Result<Self, ReductionError> {
        if !(r0 > 0.0) || !r0.is_finite() {
            return Err(ReductionError::Precondition(format!("thick radius r0 = {r0} must be positive")));
        }
        Ok(ThickParams { r0, siegel_t: SIEGEL_T })
    }

    /// r0 = largest excursion over 10⁴ Siegel-core samples, plus 0.5.
    pub fn default_for(n: usize) -> Self {
        ThickParams { r0: default_r0(n), siegel_t: SIEGEL_T }
    }
}

/// Frame L·exp(diag a) with L lower unipotent, |L_ij| ≤ ½ and every Gram–Schmidt ratio
/// |b*_{i+1}|/|b*_i| = e^{a_{i+1} − a_i} in [1/t, t].
pub fn sample_siegel_core<R: Rng>(n: usize, t: f64, rng: &mut R) -> Mat<f64> {
    let lt = t.ln();
    let mut a = [0.0; MAX_N];
    for i in 1..n {
        a[i] = a[i - 1] + rng.random_range(-lt..=lt);
    }
    let mean = a[..n].iter().sum::<f64>() / n as f64;
    let l = Mat::from_fn(n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Equal => 1.0,
        std::cmp::Ordering::Greater => rng.random_range(-0.5..=0.5),
        std::cmp::Ordering::Less => 0.0,
    });
    let e: Vec<f64> = a[..n].iter().map(|x| (x - mean).exp()).collect();
    l.scale_cols(&e)
}

pub const R0_SAMPLES: usize = 10_000;
const R0_SEED: u64 = 0x7468_6963_6b00_0001;

pub fn default_r0(n: usize) -> f64 {
    static CACHE: [OnceLock<f64>; MAX_N + 1] = [const { OnceLock::new() }; MAX_N + 1];
    *CACHE[n].get_or_init(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(R0_SEED ^ n as u64);
        let opts = ReductionOptions::default();
        let mut worst: f64 = 0.0;
        for _ in 0..R0_SAMPLES {
            let g = sample_siegel_core(n, SIEGEL_T, &mut rng);
            let e = cusp_excursion_of(Input::Frame(&g), &opts).expect("core sample reduces");
            worst = worst.max(e.value);
        }
        worst + 0.5
    })
}

pub fn in_thick(x: &SpacePoint<f64>, params: &ThickParams, opts: &ReductionOptions) -> Result<bool, ReductionError> {
    Ok(cusp_excursion_of(Input::Form(x.form()), opts)?.value <= params.r0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Retraction {
    /// Frame of the retracted point, in the same Γ-coset as the input frame.
    pub frame: Mat<f64>,
    pub moved: f64,
    pub excursion_before: f64,
    /// Cap applied to the simple-root coordinates, when a clamp was needed.
    pub clamp: Option<f64>,
    /// The clamp could not reach the thick part and the point was sent to the nearest orbit point of [e].
    pub fallback: bool,
}

/// Retraction of the point [m] into X(r0).
///
/// Points already thick are fixed. Otherwise m is reduced to γ·m = L·exp(diag a)·Q (rows in
/// Gram–Schmidt form), every simple-root gap a_{i+1} − a_i above τ is lowered to τ, and τ is the
/// largest value whose image passes the reduced-basis test for X(r0). Since that test bounds the
/// exact excursion from above, the output is thick and a second application is the identity.
pub fn retract_frame(m: &Mat<f64>, params: &ThickParams, opts: &ReductionOptions) -> Result<Retraction, ReductionError> {
    let n = m.n();
    let before = cusp_excursion_of(Input::Frame(m), opts)?.value;
    if before <= params.r0 {
        return Ok(Retraction { frame: *m, moved: 0.0, excursion_before: before, clamp: None, fallback: false });
    }
    let (_, gamma) = upper_bound_of(Input::Frame(m))?;
    let gamma_inv = gamma.inverse_unimodular()?.to_mat();
    let reduced = gamma.to_mat() * *m;
    let (q, r) = reduced.transpose().qr();
    let mut a = [0.0; MAX_N];
    for i in 0..n {
        a[i] = r[(i, i)].ln();
    }
    let lower = Mat::from_fn(n, |i, j| r[(j, i)] / r[(j, j)]);
    let alpha: Vec<f64> = (0..n - 1).map(|i| a[i + 1] - a[i]).collect();

    let clamped = |tau: f64| -> (Mat<f64>, f64) {
        let mut b = [0.0; MAX_N];
        for i in 1..n {
            b[i] = b[i - 1] + alpha[i - 1].min(tau);
        }
        let mean = b[..n].iter().sum::<f64>() / n as f64;
        let mean_a = a[..n].iter().sum::<f64>() / n as f64;
        let mut moved = 0.0;
        let mut e = [0.0; MAX_N];
        for i in 0..n {
            let ai = b[i] - mean + mean_a;
            moved += (ai - a[i]) * (ai - a[i]);
            e[i] = ai.exp();
        }
        (gamma_inv * lower.scale_cols(&e[..n]) * q.transpose(), moved.sqrt())
    };
    let accept = |f: &Mat<f64>| -> Result<bool, ReductionError> {
        // Aim just inside X(r0) so the form and frame representations agree on the result.
        Ok(upper_bound_of(Input::Frame(f))?.0 <= params.r0 - 1e-9 * (1.0 + params.r0))
    };

    let (f0, moved0) = clamped(0.0);
    if !accept(&f0)? {
        let frame = gamma_inv;
        let moved = frame_distance(m, &frame);
        return Ok(Retraction { frame, moved, excursion_before: before, clamp: None, fallback: true });
    }
    let hi_tau = alpha.iter().cloned().fold(0.0, f64::max);
    let (mut lo, mut hi) = (0.0, hi_tau);
    let mut best = (f0, moved0, 0.0);
    let (fh, mh) = clamped(hi);
    if accept(&fh)? {
        best = (fh, mh, hi);
    } else {
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let (f, mv) = clamped(mid);
            if accept(&f)? {
                lo = mid;
                best = (f, mv, mid);
            } else {
                hi = mid;
            }
        }
    }
    Ok(Retraction { frame: best.0, moved: best.1, excursion_before: before, clamp: Some(best.2), fallback: false })
}

pub fn retract_thick(x: &SpacePoint<f64>, params: &ThickParams, opts: &ReductionOptions) -> Result<SpacePoint<f64>, ReductionError> {
    let r = retract_thick_detailed(x, params, opts)?;
    if r.clamp.is_none() && !r.fallback {
        return Ok(*x);
    }
    Ok(SpacePoint::from_frame(&r.frame))
}

pub fn retract_thick_detailed(
    x: &SpacePoint<f64>,
    params: &ThickParams,
    opts: &ReductionOptions,
) -> Result<Retraction, ReductionError> {
    retract_frame(&x.frame(), params, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use flatlab_geometry::cartan_distance;

    fn opts() -> ReductionOptions {
        ReductionOptions::default()
    }

    #[test]
    fn identity_is_thick() {
        let p = ThickParams::new(1.0).unwrap();
        assert!(in_thick(&SpacePoint::identity(3), &p, &opts()).unwrap());
        let deep = SpacePoint::from_frame(&Mat::diag(&[5f64.exp(), (-5f64).exp()]));
        assert!(!in_thick(&deep, &p, &opts()).unwrap());
    }

    #[test]
    fn clamp_formula_in_dimension_two() {
        let p = ThickParams::new(1.0).unwrap();
        let s = 9.0f64;
        let x = SpacePoint::from_frame(&Mat::diag(&[s.exp(), (-s).exp()]));
        let y = retract_thick(&x, &p, &opts()).unwrap();
        let f = y.form();
        assert!(f[(0, 1)].abs() < 1e-12);
        let t_hat = 0.5 * f[(0, 0)].ln();
        assert!(t_hat > 0.0 && 2f64.sqrt() * t_hat <= p.r0 + 0.5);
        assert!((2f64.sqrt() * t_hat - p.r0).abs() < 1e-6);
        let r = retract_thick_detailed(&x, &p, &opts()).unwrap();
        assert!((r.moved - cartan_distance(&x, &y).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn thick_points_are_fixed_and_retraction_is_idempotent() {
        let p = ThickParams::new(1.0).unwrap();
        let x = SpacePoint::from_frame(&Mat::from_rows(&[[1.0, 0.3], [0.0, 1.0]]));
        assert_eq!(retract_thick(&x, &p, &opts()).unwrap(), x);
        let g = Mat::diag(&[4f64.exp(), 1.0, (-4f64).exp()]) * Mat::from_rows(&[[1.0, 0.2, 0.7], [0.0, 1.0, -0.4], [0.0, 0.0, 1.0]]);
        let y = retract_thick(&SpacePoint::from_frame(&g), &p, &opts()).unwrap();
        assert!(in_thick(&y, &p, &opts()).unwrap());
        assert_eq!(retract_thick(&y, &p, &opts()).unwrap(), y);
    }

    #[test]
    fn default_radius_is_positive_and_deterministic() {
        let r = default_r0(2);
        assert!(r > 0.5 && r < 3.0, "{r}");
        assert_eq!(r, default_r0(2));
    }
}
