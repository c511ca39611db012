//! Smooth compactly supported random chambers and group elements.
//!
//! Densities are radial polynomial bumps ∝ (1 − (‖v‖/ρ)²)^m on the ball of radius ρ, which are
//! C^{m−1} and whose radial CDF is a polynomial, so inverse-CDF sampling is exact up to root finding.

use flatlab_geometry::{Flag, GroupElement, Mat, SpacePoint};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::ShadowError;
use crate::shadow::UnipotentCoord;

pub const DEFAULT_SMOOTHNESS: u32 = 3;

/// Chambers are rejected when some block determinant against a reference chamber is below this.
pub const WALL_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChamberDensity {
    pub rho: f64,
    pub smoothness: u32,
}

impl ChamberDensity {
    pub fn new(rho: f64, smoothness: u32) -> Result<Self, ShadowError> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(ShadowError::Density(format!("radius {rho} must be positive")));
        }
        if !(2..=16).contains(&smoothness) {
            return Err(ShadowError::Density(format!("bump exponent {smoothness} must lie in 2..=16")));
        }
        Ok(ChamberDensity { rho, smoothness })
    }
}

fn binomial(m: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (m - i) as f64 / (i + 1) as f64)
}

/// Unnormalized ∫₀ˢ t^{D−1}(1 − t²)^m dt.
fn radial_mass(dim: usize, m: u32, s: f64) -> f64 {
    (0..=m)
        .map(|k| {
            let p = dim as f64 + 2.0 * k as f64;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * binomial(m, k) * s.powf(p) / p
        })
        .sum()
}

/// Radius in [0, 1] with P(radius ≤ s) = u for the bump density on the unit ball of R^dim.
pub fn bump_radius_quantile(dim: usize, m: u32, u: f64) -> f64 {
    let total = radial_mass(dim, m, 1.0);
    let target = u * total;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if radial_mass(dim, m, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// A point of the open ball of radius rho in R^dim drawn from the bump density.
pub fn sample_bump<R: Rng + ?Sized>(dim: usize, rho: f64, m: u32, rng: &mut R) -> Vec<f64> {
    loop {
        let dir: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let len = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        if len < 1e-300 {
            continue;
        }
        let r = rho * bump_radius_quantile(dim, m, rng.random::<f64>());
        if r >= rho {
            continue;
        }
        return dir.iter().map(|x| x * r / len).collect();
    }
}

/// log n with the bump density of radius rho in the nilpotent coordinates.
pub fn sample_unipotent<R: Rng + ?Sized>(n: usize, density: &ChamberDensity, rng: &mut R) -> UnipotentCoord<f64> {
    let v = sample_bump(n * (n - 1) / 2, density.rho, density.smoothness, rng);
    UnipotentCoord::from_entries(n, &v)
}

/// g·n·z* with x = [g], g ∈ NA, and log n bump-distributed; the result lies in S_x(rho).
pub fn sample_chamber<R: Rng + ?Sized>(x: &SpacePoint<f64>, density: &ChamberDensity, rng: &mut R) -> Flag<f64> {
    let u = sample_unipotent(x.n(), density, rng);
    u.chamber().translate(&x.na_frame())
}

/// Smallest block determinant |det[b₁..b_i | c₁..c_{n−i}]| of the canonical frames; zero on a wall.
pub fn wall_distance(b: &Flag<f64>, c: &Flag<f64>) -> f64 {
    let n = b.n();
    let (qb, qc) = (b.canonical(), c.canonical());
    (1..n)
        .map(|i| Mat::from_fn(n, |r, j| if j < i { qb[(r, j)] } else { qc[(r, j - i)] }).det().abs())
        .fold(f64::INFINITY, f64::min)
}

/// A chamber drawn as in [`sample_chamber`], resampled until it is at least [`WALL_TOL`] away
/// from failing to be opposite to `other`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OppositeDraw {
    pub chamber: Flag<f64>,
    pub resamples: u32,
}

pub fn sample_chamber_opposite<R: Rng + ?Sized>(
    x: &SpacePoint<f64>,
    density: &ChamberDensity,
    other: &Flag<f64>,
    rng: &mut R,
) -> OppositeDraw {
    let mut resamples = 0;
    loop {
        let chamber = sample_chamber(x, density, rng);
        if wall_distance(other, &chamber) > WALL_TOL {
            return OppositeDraw { chamber, resamples };
        }
        resamples += 1;
    }
}

/// Frobenius-orthonormal basis of the traceless n×n matrices.
fn sl_basis(n: usize) -> Vec<Mat<f64>> {
    let mut out = Vec::with_capacity(n * n - 1);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let mut m = Mat::zeros(n);
                m[(i, j)] = 1.0;
                out.push(m);
            }
        }
    }
    for k in 1..n {
        let s = 1.0 / ((k * (k + 1)) as f64).sqrt();
        let d: Vec<f64> = (0..n).map(|i| if i < k { s } else if i == k { -(k as f64) * s } else { 0.0 }).collect();
        out.push(Mat::diag(&d));
    }
    out
}

/// exp(X) for a traceless X drawn from the bump density of radius 1 (Frobenius norm); the point
/// [exp X] is within distance ‖(X + Xᵀ)/2‖ < 1 of [e].
pub fn sample_group_ball_with<R: Rng + ?Sized>(n: usize, smoothness: u32, rng: &mut R) -> GroupElement<f64> {
    let basis = sl_basis(n);
    let v = sample_bump(basis.len(), 1.0, smoothness, rng);
    let x = basis.iter().zip(&v).fold(Mat::zeros(n), |acc, (b, c)| acc + b.scale(*c));
    GroupElement::normalized(x.expm()).expect("exponential of a traceless matrix")
}

pub fn sample_group_ball<R: Rng + ?Sized>(n: usize, rng: &mut R) -> GroupElement<f64> {
    sample_group_ball_with(n, DEFAULT_SMOOTHNESS, rng)
}
