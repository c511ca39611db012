//! A path between two thick points that stays in a random flat and is pushed into the thick part.
//!
//! x and y lie on a flat F with midpoint m. Chambers r_x, r_y are drawn near the two chambers of F
//! that x and y face, and span a flat E. The route Ω runs in E around its point p_m closest to m:
//! out from x′ to a circle, along the shorter arc of the circle, and in to y′. Each sample is
//! retracted into the thick part, and the retracted chain is compared with d(x, y).

use flatlab_geometry::{closest_point_on_flat, flat_spanned, Flag, FlatFrame, Mat, SpacePoint};
use flatlab_reduction::{in_thick, ReductionOptions, ThickParams};
use flatlab_shadows::{sample_group_ball, sample_unipotent, wall_distance, ChamberDensity, SeededStream, WALL_TOL};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::ExperimentError;
use crate::heatmap::grid_basis;
use crate::hp::{HpFrame, ReducedPoint};

pub const DEFAULT_RESAMPLES: u32 = 20;
/// Perturbation applied to y when x and y lie on a wall of every flat through them.
pub const SINGULAR_PERTURBATION: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LmrParams {
    pub density: ChamberDensity,
    pub thick: ThickParams,
    pub max_resamples: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Out,
    Arc,
    In,
}

impl Phase {
    pub fn label(self) -> &'static str {
        match self {
            Phase::Out => "out",
            Phase::Arc => "arc",
            Phase::In => "in",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathRecord {
    /// d(x, y).
    pub distance: f64,
    /// Ω(i) in the Cartan coordinates of E.
    pub omega: Vec<[f64; 3]>,
    pub phases: Vec<Phase>,
    pub samples: Vec<ReducedPoint>,
    /// x, ρ(Ω(0)), …, ρ(Ω(N)), y.
    pub chain: Vec<ReducedPoint>,
    pub excursions: Vec<f64>,
    /// Distance each sample moved under the retraction.
    pub moved: Vec<f64>,
    /// Length of the polygon x, Ω(0), …, Ω(N), y.
    pub ambient_length: f64,
    pub thick_length: f64,
    pub ratio: f64,
    pub max_excursion: f64,
    pub arc_radius: f64,
    /// Weyl chambers of E containing x′ − p_m and y′ − p_m, as coordinate orders.
    pub chambers: ([usize; 3], [usize; 3]),
    pub resamples: u32,
    /// d(x, E) and d(y, E).
    pub offsets: (f64, f64),
    pub perturbed: bool,
}

impl PathRecord {
    fn trivial(x: &SpacePoint<f64>) -> Self {
        let p = ReducedPoint::from_frame(x.frame());
        PathRecord {
            distance: 0.0,
            omega: vec![[0.0; 3]],
            phases: vec![Phase::Out],
            samples: vec![p.clone()],
            chain: vec![p],
            excursions: vec![0.0],
            moved: vec![0.0],
            ambient_length: 0.0,
            thick_length: 0.0,
            ratio: 1.0,
            max_excursion: 0.0,
            arc_radius: 0.0,
            chambers: ([0, 1, 2], [0, 1, 2]),
            resamples: 0,
            offsets: (0.0, 0.0),
            perturbed: false,
        }
    }
}

/// Coordinates sorted by decreasing value; identifies the closed Weyl chamber of v.
pub fn weyl_chamber(v: &[f64; 3]) -> [usize; 3] {
    let mut idx = [0, 1, 2];
    idx.sort_by(|&a, &b| v[b].total_cmp(&v[a]).then(a.cmp(&b)));
    idx
}

fn to_plane(v: &[f64; 3]) -> (f64, f64) {
    let [e1, e2] = grid_basis();
    ((0..3).map(|k| v[k] * e1[k]).sum(), (0..3).map(|k| v[k] * e2[k]).sum())
}

fn from_plane(x: f64, y: f64) -> [f64; 3] {
    crate::heatmap::grid_vector(x, y)
}

/// Points of the route at spacing at most 1, from a to b through the circle of radius `radius`.
fn route(a: (f64, f64), b: (f64, f64), radius: f64) -> Vec<((f64, f64), Phase)> {
    let norm = |p: (f64, f64)| p.0.hypot(p.1);
    let angle = |p: (f64, f64), fallback: f64| if norm(p) > 1e-12 { p.1.atan2(p.0) } else { fallback };
    let ta = angle(a, angle((-b.0, -b.1), 0.0));
    let tb = angle(b, ta + std::f64::consts::PI);
    let mut dt = (tb - ta).rem_euclid(std::f64::consts::TAU);
    if dt > std::f64::consts::PI {
        dt -= std::f64::consts::TAU;
    }
    let mut pts = vec![(a, Phase::Out)];
    let segment = |from: (f64, f64), to: (f64, f64), phase: Phase, pts: &mut Vec<_>| {
        let len = norm((to.0 - from.0, to.1 - from.1));
        let k = len.ceil() as usize;
        for s in 1..=k {
            let t = s as f64 / k as f64;
            pts.push(((from.0 + t * (to.0 - from.0), from.1 + t * (to.1 - from.1)), phase));
        }
    };
    let out_end = (radius * ta.cos(), radius * ta.sin());
    segment(a, out_end, Phase::Out, &mut pts);
    let k = (radius * dt.abs()).ceil() as usize;
    for s in 1..=k {
        let t = ta + dt * s as f64 / k as f64;
        pts.push(((radius * t.cos(), radius * t.sin()), Phase::Arc));
    }
    let arc_end = pts.last().unwrap().0;
    segment(arc_end, b, Phase::In, &mut pts);
    pts
}

/// A pair x = [h_x], y = [h_x·e^{d·w}] with w a unit Cartan vector with strictly decreasing entries.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeodesicPair {
    pub hx: Mat<f64>,
    pub w: [f64; 3],
    pub d: f64,
    /// The direction was nudged off a wall by at most [`SINGULAR_PERTURBATION`].
    pub perturbed: bool,
}

impl GeodesicPair {
    /// Sorts the entries of v into decreasing order by permuting the columns of h, and pushes
    /// v off the walls when needed.
    pub fn new(h: Mat<f64>, v: [f64; 3]) -> Self {
        let order = weyl_chamber(&v);
        let mut hx = Mat::from_fn(3, |r, c| h[(r, order[c])]);
        if hx.det() < 0.0 {
            let c: Vec<f64> = hx.col(2)[..3].iter().map(|x| -x).collect();
            hx.set_col(2, &c);
        }
        let mut s = order.map(|k| v[k]);
        let e = SINGULAR_PERTURBATION / 2f64.sqrt();
        let mut perturbed = false;
        if s[0] - s[1] < e {
            s[0] = s[1] + e;
            perturbed = true;
        }
        if s[1] - s[2] < e {
            s[2] = s[1] - e;
            perturbed = true;
        }
        let mean = s.iter().sum::<f64>() / 3.0;
        s.iter_mut().for_each(|x| *x -= mean);
        let d = s.iter().map(|x| x * x).sum::<f64>().sqrt();
        GeodesicPair { hx, w: s.map(|x| x / d), d, perturbed }
    }

    pub fn from_points(x: &SpacePoint<f64>, y: &SpacePoint<f64>) -> Self {
        let gx = x.frame();
        let svd = (gx.inverse().expect("frame is invertible") * y.frame()).svd();
        GeodesicPair::new(gx * svd.u, [svd.s[0].ln(), svd.s[1].ln(), svd.s[2].ln()])
    }

    fn diag(&self, t: f64) -> Mat<f64> {
        Mat::diag(&self.w.map(|c| (t * c).exp()))
    }

    pub fn x(&self) -> ReducedPoint {
        ReducedPoint::from_frame(self.hx)
    }

    /// y in extended precision; it is usually far outside the range of a double-precision form.
    pub fn y(&self) -> Result<ReducedPoint, ExperimentError> {
        ReducedPoint::reduce(&HpFrame::product(&[&self.hx], &self.w.map(|c| self.d * c)), None)
    }
}

/// Attempts allowed when drawing a thick endpoint.
pub const PAIR_ATTEMPTS: usize = 1000;

/// x = [g] with g from the unit group ball, and y at distance d from x in a uniformly random
/// direction, redrawn until y is thick.
pub fn random_thick_pair(
    d: f64,
    thick: &ThickParams,
    stream: &SeededStream,
    opts: &ReductionOptions,
) -> Result<GeodesicPair, ExperimentError> {
    let mut rng = stream.rng();
    let g = sample_group_ball(3, &mut rng);
    for _ in 0..PAIR_ATTEMPTS {
        let gauss = Mat::from_fn(3, |_, _| rng.sample::<f64, _>(StandardNormal));
        let (k, _) = gauss.qr();
        let theta = rng.random_range(0.0..std::f64::consts::TAU);
        let pair = GeodesicPair::new(*g.matrix() * k, from_plane(d * theta.cos(), d * theta.sin()));
        if pair.y()?.excursion(opts)?.value <= thick.r0 {
            return Ok(pair);
        }
    }
    Err(ExperimentError::Degenerate(format!("no thick endpoint at distance {d} in {PAIR_ATTEMPTS} draws")))
}

pub fn lmr_path(
    x: &SpacePoint<f64>,
    y: &SpacePoint<f64>,
    params: &LmrParams,
    stream: &SeededStream,
    opts: &ReductionOptions,
) -> Result<PathRecord, ExperimentError> {
    if x.n() != 3 || y.n() != 3 {
        return Err(ExperimentError::Precondition("lmr paths need n = 3".into()));
    }
    if flatlab_geometry::cartan_distance(x, y)? < 1e-12 {
        if !in_thick(x, &params.thick, opts)? {
            return Err(ExperimentError::Precondition(format!("x is not in the thick part X(r0 = {})", params.thick.r0)));
        }
        return Ok(PathRecord::trivial(x));
    }
    lmr_path_on(&GeodesicPair::from_points(x, y), params, stream, opts)
}

/// The path for a pair given by its geodesic.
///
/// Flats and closest points are computed after moving the midpoint m = [h_x·e^{d·w/2}] to [e],
/// where x and y are diagonal. Only the samples of Ω are carried back, as extended-precision
/// products.
pub fn lmr_path_on(
    pair: &GeodesicPair,
    params: &LmrParams,
    stream: &SeededStream,
    opts: &ReductionOptions,
) -> Result<PathRecord, ExperimentError> {
    let (xr, yr) = (pair.x(), pair.y()?);
    for (name, p) in [("x", &xr), ("y", &yr)] {
        if p.excursion(opts)?.value > params.thick.r0 {
            return Err(ExperimentError::Precondition(format!("{name} is not in the thick part X(r0 = {})", params.thick.r0)));
        }
    }
    let (distance, r) = (pair.d, pair.d / 2.0);
    let j = Mat::reversal(3);
    let (ex, ey) = (pair.diag(-r), pair.diag(r));

    // Conjugating the unipotent draws keeps the flag frames well conditioned.
    let mut rng = stream.rng();
    let mut resamples = 0;
    let (rx, ry) = loop {
        let nx = sample_unipotent(3, &params.density, &mut rng).exp();
        let ny = sample_unipotent(3, &params.density, &mut rng).exp();
        let rx = Flag::new(ex * nx * ey * j)?;
        let ry = Flag::new(ey * j * ny * j * ex)?;
        if wall_distance(&ry, &rx) > WALL_TOL {
            break (rx, ry);
        }
        resamples += 1;
        if resamples > params.max_resamples {
            return Err(ExperimentError::Degenerate(format!("chambers not opposite after {} resamples", params.max_resamples)));
        }
    };
    let e: FlatFrame<f64> = flat_spanned(&ry, &rx)?;
    let (ux, dx) = closest_point_on_flat(&SpacePoint::from_frame(&ex), &e);
    let (uy, dy) = closest_point_on_flat(&SpacePoint::from_frame(&ey), &e);
    let (um, _) = closest_point_on_flat(&SpacePoint::identity(3), &e);
    let c = |v: &flatlab_geometry::CartanVector<f64>| [v.coords()[0], v.coords()[1], v.coords()[2]];
    let (ux, uy, um) = (c(&ux), c(&uy), c(&um));
    let local = |v: [f64; 3]| [v[0] - um[0], v[1] - um[1], v[2] - um[2]];
    let (ax, ay) = (to_plane(&local(ux)), to_plane(&local(uy)));
    let arc_radius = ax.0.hypot(ax.1).max(ay.0.hypot(ay.1)).max(r);
    let chambers = (weyl_chamber(&local(ux)), weyl_chamber(&local(uy)));

    let pts = route(ax, ay, arc_radius);
    let mut omega = Vec::with_capacity(pts.len());
    let mut phases = Vec::with_capacity(pts.len());
    let mut samples: Vec<ReducedPoint> = Vec::with_capacity(pts.len());
    let mut excursions = Vec::with_capacity(pts.len());
    let mut moved = Vec::with_capacity(pts.len());
    let mut chain = vec![xr.clone()];
    for (p, phase) in pts {
        let l = from_plane(p.0, p.1);
        let v = [um[0] + l[0], um[1] + l[1], um[2] + l[2]];
        let frame = HpFrame::product(&[&pair.hx, &ey, e.matrix()], &v);
        let point = ReducedPoint::reduce(&frame, samples.last().map(|s| &s.u))?;
        excursions.push(point.excursion(opts)?.value);
        let (retracted, info) = point.retract(&params.thick, opts)?;
        moved.push(info.moved);
        chain.push(retracted);
        omega.push(v);
        phases.push(phase);
        samples.push(point);
    }
    chain.push(yr.clone());

    let mut ambient_length = xr.distance(&samples[0]) + samples.last().unwrap().distance(&yr);
    ambient_length += samples.windows(2).map(|s| s[0].distance(&s[1])).sum::<f64>();
    let thick_length: f64 = chain.windows(2).map(|s| s[0].distance(&s[1])).sum();
    let max_excursion = excursions.iter().cloned().fold(0.0, f64::max);
    Ok(PathRecord {
        distance,
        omega,
        phases,
        samples,
        chain,
        excursions,
        moved,
        ambient_length,
        thick_length,
        ratio: thick_length / distance,
        max_excursion,
        arc_radius,
        chambers,
        resamples,
        offsets: (dx, dy),
        perturbed: pair.perturbed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use flatlab_shadows::DEFAULT_SMOOTHNESS;

    fn params() -> LmrParams {
        LmrParams {
            density: ChamberDensity::new(1.0, DEFAULT_SMOOTHNESS).unwrap(),
            thick: ThickParams::default_for(3),
            max_resamples: DEFAULT_RESAMPLES,
        }
    }

    #[test]
    fn equal_endpoints_give_a_single_point() {
        let x = SpacePoint::identity(3);
        let p = lmr_path(&x, &x, &params(), &SeededStream::new(1, 0), &ReductionOptions::default()).unwrap();
        assert_eq!(p.samples.len(), 1);
        assert_eq!(p.thick_length, 0.0);
    }

    #[test]
    fn route_has_unit_steps_and_hits_its_ends() {
        let pts = route((1.0, 0.5), (-2.0, 0.3), 6.0);
        assert_eq!(pts[0].0, (1.0, 0.5));
        let end = pts.last().unwrap().0;
        assert!((end.0 + 2.0).abs() < 1e-12 && (end.1 - 0.3).abs() < 1e-12);
        for w in pts.windows(2) {
            let d = (w[1].0 .0 - w[0].0 .0).hypot(w[1].0 .1 - w[0].0 .1);
            assert!(d <= 1.0 + 1e-12, "step {d}");
        }
    }

    #[test]
    fn model_flat_pair_stays_within_the_cap() {
        let x = SpacePoint::identity(3);
        let v = [5.0 / 2f64.sqrt(), 0.0, -5.0 / 2f64.sqrt()];
        let y = SpacePoint::from_frame(&Mat::diag(&v.map(f64::exp)));
        let opts = ReductionOptions::default();
        if !in_thick(&y, &params().thick, &opts).unwrap() {
            return;
        }
        let p = lmr_path(&x, &y, &params(), &SeededStream::new(3, 0), &opts).unwrap();
        assert!((p.distance - 5.0).abs() < 1e-9);
        assert!(p.ratio >= 1.0 - 1e-6 && p.ratio <= 10.0, "ratio {}", p.ratio);
    }

    #[test]
    fn deep_endpoint_is_rejected() {
        let y = SpacePoint::from_frame(&Mat::diag(&[6f64.exp(), 1.0, (-6f64).exp()]));
        let r = lmr_path(&SpacePoint::identity(3), &y, &params(), &SeededStream::new(1, 0), &ReductionOptions::default());
        assert!(matches!(r, Err(ExperimentError::Precondition(_))));
    }
}
