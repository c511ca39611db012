//! Filling a square loop in a flat of SL_3(Z)\X over the dyadic grid.
//!
//! The loop is the boundary of a square of side `loop_scale` in a flat [h·exp(a)], placed by random
//! search so that its corners are thick. With the closed flat, h is an eigenvector frame of a
//! hyperbolic element of SL_3(Z); its stabilizer is a lattice in the diagonal group, so the flat
//! projects to a torus and stays near the thick part at every scale. A random flat instead wanders
//! into the cusps. The domain [−L, L]² is tiled by the dyadic complex and mapped linearly onto the
//! square. Every cell is coned from its center, all sample points are retracted into the thick part,
//! and the area of the retracted disk is Heron's formula summed over the cone triangles.

use std::collections::BTreeSet;

use flatlab_reduction::{ReductionOptions, ThickParams};
use flatlab_shadows::SeededStream;
use rand::Rng;
use rayon::prelude::*;
use rug::ops::Pow;
use rug::Float;

use crate::dyadic::{Cell, DyadicComplex};
use crate::error::ExperimentError;
use crate::fit::{least_squares, LinearFit};
use crate::heatmap::{grid_vector, random_thick_flat};
use crate::hp::{precision_for, HpFrame, ReducedPoint};

pub const MAX_LOOP_LEVEL: u32 = 7;
pub const DEFAULT_ATTEMPTS: usize = 1000;
/// Loop centers are drawn uniformly from the disk of this radius around the base of the flat.
pub const OFFSET_RADIUS: f64 = 5.0;
/// ln cond(P) for the closed flat, rounded up.
const BASE_LOG_COND: f64 = 4.0;

/// Companion matrix of x³ − 3x + 1 (determinant −1); its eigenvalues are 2cos(2πk/9), k = 1, 2, 4.
pub const HYPERBOLIC: [[i64; 3]; 3] = [[0, 1, 0], [0, 0, 1], [-1, 3, 0]];

/// The flat carrying the loop and its filling disk.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FillFlat {
    /// The eigenvector flat of [`HYPERBOLIC`]; periodic, so the disk never leaves a compact set.
    Closed,
    /// A flat spanned by two random chambers at e with shadow radius rho, redrawn on every attempt.
    Random { rho: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DehnParams {
    pub flat: FillFlat,
    pub thick: ThickParams,
    pub max_attempts: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DehnResult {
    pub loop_scale: i64,
    pub boundary_length: f64,
    pub filled_area: f64,
    /// Heron area of the unretracted cone triangles; equals loop_scale² up to rounding.
    pub flat_area: f64,
    /// (largest stretch of a cell edge under the retraction)² · flat area.
    pub lipschitz_bound: f64,
    pub max_excursion: f64,
    /// Largest excursion along the loop before retraction.
    pub boundary_max_excursion: f64,
    pub attempts: usize,
    pub angle: f64,
    pub offset: (f64, f64),
    pub corner_excursions: [f64; 4],
    pub cells: usize,
    pub vertices: usize,
}

/// Eigenvector frame of [`HYPERBOLIC`], scaled to determinant 1: column k is (1, λ_k, λ_k²)·c.
pub fn closed_flat_frame(prec: u32) -> HpFrame {
    let two_pi_ninths = Float::with_val(prec, rug::float::Constant::Pi) * 2u32 / 9u32;
    let lambda: Vec<Float> = [1u32, 2, 4].iter().map(|&k| Float::with_val(prec, &two_pi_ninths * k).cos() * 2u32).collect();
    // Vandermonde determinant Π_{j<k} (λ_k − λ_j); the chosen order makes it positive.
    let mut det = Float::with_val(prec, 1);
    for k in 0..3 {
        for j in 0..k {
            det *= Float::with_val(prec, &lambda[k] - &lambda[j]);
        }
    }
    let (order, det) = if det < 0 { ([1, 0, 2], -det) } else { ([0, 1, 2], det) };
    let c = det.cbrt().recip();
    let mut a = Vec::with_capacity(9);
    for i in 0..3i32 {
        for &k in &order {
            a.push(Float::with_val(prec, (&lambda[k]).pow(i)) * &c);
        }
    }
    HpFrame::from_floats(3, prec, a)
}

/// Level i of the dyadic complex with half width loop_scale = 2^i − 1.
pub fn loop_level(loop_scale: i64) -> Result<u32, ExperimentError> {
    (1..=MAX_LOOP_LEVEL).find(|&i| (1i64 << i) - 1 == loop_scale).ok_or_else(|| {
        ExperimentError::Precondition(format!("loop_scale = {loop_scale} is not 2^i − 1 with 1 ≤ i ≤ {MAX_LOOP_LEVEL}"))
    })
}

/// Map from doubled domain coordinates to Cartan coordinates of the flat. The domain square
/// [−L, L]² lands on a square of side L.
#[derive(Clone, Copy, Debug)]
struct Chart {
    angle: f64,
    offset: (f64, f64),
}

impl Chart {
    fn cartan(&self, p: (i64, i64)) -> [f64; 3] {
        let (x, y) = (p.0 as f64 / 4.0, p.1 as f64 / 4.0);
        let (s, c) = self.angle.sin_cos();
        grid_vector(self.offset.0 + c * x - s * y, self.offset.1 + s * x + c * y)
    }
}

struct Sample {
    point: ReducedPoint,
    retracted: ReducedPoint,
    excursion: f64,
}

fn heron(a: f64, b: f64, c: f64) -> f64 {
    let p = (a + b + c) * (-a + b + c) * (a - b + c) * (a + b - c);
    0.25 * p.max(0.0).sqrt()
}

/// Doubled coordinates of the corners (counterclockwise) and the center of a cell.
fn cell_vertices(cell: &Cell) -> ([(i64, i64); 4], (i64, i64)) {
    let (x, y, s) = (2 * cell.corner[0], 2 * cell.corner[1], 2 * cell.side);
    ([(x, y), (x + s, y), (x + s, y + s), (x, y + s)], (x + s / 2, y + s / 2))
}

/// Doubled coordinates of the integer points on the boundary of [−L, L]², counterclockwise.
fn boundary_keys(l: i64) -> Vec<(i64, i64)> {
    let mut keys = Vec::with_capacity(8 * l as usize);
    for t in -l..l {
        keys.push((2 * t, -2 * l));
    }
    for t in -l..l {
        keys.push((2 * l, 2 * t));
    }
    for t in -l..l {
        keys.push((-2 * t, 2 * l));
    }
    for t in -l..l {
        keys.push((-2 * l, -2 * t));
    }
    keys
}

pub fn dehn_fill_experiment(
    loop_scale: i64,
    params: &DehnParams,
    stream: &SeededStream,
    opts: &ReductionOptions,
) -> Result<DehnResult, ExperimentError> {
    let complex = DyadicComplex::new(loop_level(loop_scale)?, 2)?;
    let l = complex.half_width();
    let prec = precision_for(2f64.sqrt() * (OFFSET_RADIUS + l as f64) + BASE_LOG_COND);
    let closed = closed_flat_frame(prec);
    let excursion = |base: &HpFrame, chart: &Chart, p| -> Result<f64, ExperimentError> {
        Ok(ReducedPoint::reduce(&base.scaled(&chart.cartan(p)), None)?.excursion(opts)?.value)
    };

    // Random search for a loop with thick corners.
    let corners = [(-2 * l, -2 * l), (2 * l, -2 * l), (2 * l, 2 * l), (-2 * l, 2 * l)];
    let mut found = None;
    for attempt in 0..params.max_attempts {
        let sub = stream.child(attempt as u64);
        let base = match params.flat {
            FillFlat::Closed => closed.clone(),
            FillFlat::Random { rho } => HpFrame::from_mat(random_thick_flat(3, rho, &sub.child(1))?.matrix(), prec),
        };
        let mut rng = sub.rng();
        let angle = rng.random_range(0.0..std::f64::consts::TAU);
        let (rad, phi) = (OFFSET_RADIUS * rng.random::<f64>().sqrt(), rng.random_range(0.0..std::f64::consts::TAU));
        let chart = Chart { angle, offset: (rad * phi.cos(), rad * phi.sin()) };
        let mut ex = [0.0; 4];
        for (e, &c) in ex.iter_mut().zip(&corners) {
            *e = excursion(&base, &chart, c)?;
        }
        if ex.iter().all(|&e| e <= params.thick.r0) {
            found = Some((base, chart, attempt + 1, ex));
            break;
        }
    }
    let (base, chart, attempts, corner_excursions) = found.ok_or_else(|| {
        ExperimentError::Degenerate(format!("no loop with thick corners in {} attempts", params.max_attempts))
    })?;

    let cells: Vec<Cell> = complex.cells().collect();
    let boundary = boundary_keys(l);
    let mut set: BTreeSet<(i64, i64)> = boundary.iter().copied().collect();
    for cell in &cells {
        let (c, m) = cell_vertices(cell);
        set.extend(c);
        set.insert(m);
    }
    let keys: Vec<(i64, i64)> = set.into_iter().collect();
    let samples: Vec<Sample> = keys
        .par_iter()
        .map(|&k| {
            let point = ReducedPoint::reduce(&base.scaled(&chart.cartan(k)), None)?;
            let excursion = point.excursion(opts)?.value;
            let (retracted, _) = point.retract(&params.thick, opts)?;
            Ok(Sample { point, retracted, excursion })
        })
        .collect::<Result<_, ExperimentError>>()?;
    let at = |k: (i64, i64)| &samples[keys.binary_search(&k).expect("vertex was sampled")];

    let mut filled_area = 0.0;
    let mut flat_area = 0.0;
    let mut stretch: f64 = 0.0;
    for cell in &cells {
        let (c, m) = cell_vertices(cell);
        let side = cell.side as f64 / 2.0;
        let (cm, mm) = (c.map(at), at(m));
        for i in 0..4 {
            let (a, b) = (cm[i], cm[(i + 1) % 4]);
            let edge = a.retracted.distance(&b.retracted);
            stretch = stretch.max(edge / side);
            filled_area += heron(edge, a.retracted.distance(&mm.retracted), b.retracted.distance(&mm.retracted));
            flat_area += heron(a.point.distance(&b.point), a.point.distance(&mm.point), b.point.distance(&mm.point));
        }
    }
    let ring: Vec<&Sample> = boundary.iter().map(|&k| at(k)).collect();
    let boundary_length: f64 = (0..ring.len()).map(|i| ring[i].retracted.distance(&ring[(i + 1) % ring.len()].retracted)).sum();
    let max_excursion = samples.iter().map(|s| s.excursion).fold(0.0, f64::max);
    let boundary_max_excursion = ring.iter().map(|s| s.excursion).fold(0.0, f64::max);
    Ok(DehnResult {
        loop_scale,
        boundary_length,
        filled_area,
        flat_area,
        lipschitz_bound: stretch * stretch * (l * l) as f64,
        max_excursion,
        boundary_max_excursion,
        attempts,
        angle: chart.angle,
        offset: chart.offset,
        corner_excursions,
        cells: cells.len(),
        vertices: keys.len(),
    })
}

/// Slope of log(filled area) against log(loop scale).
pub fn area_exponent(results: &[DehnResult]) -> Option<LinearFit> {
    let x: Vec<f64> = results.iter().map(|r| (r.loop_scale as f64).ln()).collect();
    let y: Vec<f64> = results.iter().map(|r| r.filled_area.ln()).collect();
    least_squares(&x, &y)
}
