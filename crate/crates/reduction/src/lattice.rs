//! Lattices g·Zⁿ, LLL and Lagrange reduction, and Fincke–Pohst enumeration.

use flatlab_geometry::{GroupElement, Mat, MAX_N};

use crate::error::ReductionError;
use crate::int::IntMat;

pub const LLL_DELTA: f64 = 0.99;
pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// Lattice generated by the columns of `basis`, with covolume 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatticeBasis {
    basis: Mat<f64>,
    gram: Mat<f64>,
}

impl LatticeBasis {
    pub fn new(basis: Mat<f64>) -> Result<Self, ReductionError> {
        let det = basis.det();
        if !basis.is_finite() || (det.abs() - 1.0).abs() > 1e-9 {
            return Err(ReductionError::Precondition(format!("lattice covolume {det} is not 1")));
        }
        Ok(LatticeBasis { basis, gram: (basis.transpose() * basis).symmetrized() })
    }

    /// Rescales an arbitrary full-rank basis to covolume 1.
    pub fn normalized(basis: Mat<f64>) -> Result<Self, ReductionError> {
        let det = basis.det().abs();
        if !(det > 0.0) || !det.is_finite() {
            return Err(ReductionError::Precondition("singular lattice basis".into()));
        }
        Self::new(basis.scale(det.powf(-1.0 / basis.n() as f64)))
    }

    /// The lattice spanned by the rows of g, i.e. by the columns of gᵀ.
    pub fn from_group(g: &GroupElement<f64>) -> Self {
        let basis = g.matrix().transpose();
        LatticeBasis { basis, gram: (basis.transpose() * basis).symmetrized() }
    }

    pub fn basis(&self) -> &Mat<f64> {
        &self.basis
    }

    pub fn gram(&self) -> &Mat<f64> {
        &self.gram
    }

    pub fn n(&self) -> usize {
        self.basis.n()
    }

    pub fn dual(&self) -> Self {
        let basis = self.basis.inverse().expect("unimodular basis").transpose();
        LatticeBasis { basis, gram: (basis.transpose() * basis).symmetrized() }
    }
}

/// Gram–Schmidt data of a column basis: b_i = b*_i + Σ_{j<i} mu[i][j]·b*_j, bstar[i] = |b*_i|².
#[derive(Clone, Copy, Debug)]
pub struct GramSchmidt {
    pub mu: [[f64; MAX_N]; MAX_N],
    pub bstar: [f64; MAX_N],
}

pub fn gram_schmidt(b: &Mat<f64>) -> GramSchmidt {
    let n = b.n();
    let mut mu = [[0.0; MAX_N]; MAX_N];
    let mut bstar = [0.0; MAX_N];
    let mut star: [[f64; MAX_N]; MAX_N] = [[0.0; MAX_N]; MAX_N];
    for i in 0..n {
        let bi = b.col(i);
        let mut v = bi;
        for j in 0..i {
            let m = dot(&bi, &star[j], n) / bstar[j];
            mu[i][j] = m;
            for k in 0..n {
                v[k] -= m * star[j][k];
            }
        }
        // A second pass keeps b*_i orthogonal when b_i is nearly dependent.
        for j in 0..i {
            let c = dot(&v, &star[j], n) / bstar[j];
            mu[i][j] += c;
            for k in 0..n {
                v[k] -= c * star[j][k];
            }
        }
        mu[i][i] = 1.0;
        star[i] = v;
        bstar[i] = dot(&v, &v, n);
    }
    GramSchmidt { mu, bstar }
}

fn dot(a: &[f64], b: &[f64], n: usize) -> f64 {
    (0..n).map(|k| a[k] * b[k]).sum()
}

fn col_norm2(b: &Mat<f64>, j: usize) -> f64 {
    let c = b.col(j);
    dot(&c, &c, b.n())
}

fn round_coeff(x: f64) -> Result<i64, ReductionError> {
    let r = x.round();
    if !r.is_finite() || r.abs() > 4.0e18 {
        return Err(ReductionError::Overflow);
    }
    Ok(r as i64)
}

/// Reduced column basis together with the unimodular transform: basis = input · transform.
#[derive(Clone, Copy, Debug)]
pub struct Reduced {
    pub basis: Mat<f64>,
    pub transform: IntMat,
}

fn sub_col(b: &mut Mat<f64>, dst: usize, src: usize, q: i64) {
    let (d, s) = (b.col(dst), b.col(src));
    let qf = q as f64;
    let v: Vec<f64> = (0..b.n()).map(|k| d[k] - qf * s[k]).collect();
    b.set_col(dst, &v);
}

fn swap_cols(b: &mut Mat<f64>, i: usize, j: usize) {
    let (ci, cj) = (b.col(i), b.col(j));
    b.set_col(i, &cj[..b.n()]);
    b.set_col(j, &ci[..b.n()]);
}

/// LLL reduction of the columns with Lovász parameter `delta`.
pub fn lll(input: &Mat<f64>, delta: f64) -> Result<Reduced, ReductionError> {
    let n = input.n();
    let mut b = *input;
    let mut u = IntMat::identity(n);
    let mut k = 1;
    let mut steps = 0usize;
    while k < n {
        steps += 1;
        if steps > 100_000 {
            return Err(ReductionError::Precondition("LLL did not terminate".into()));
        }
        // Size reduction, repeated while floating error leaves large coefficients.
        for _ in 0..8 {
            let mut mu = gram_schmidt(&b).mu;
            let mut changed = false;
            for j in (0..k).rev() {
                if mu[k][j].abs() > 0.5 {
                    let q = round_coeff(mu[k][j])?;
                    sub_col(&mut b, k, j, q);
                    u.sub_col_multiple(k, j, q)?;
                    for l in 0..j {
                        mu[k][l] -= q as f64 * mu[j][l];
                    }
                    mu[k][j] -= q as f64;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let gs = gram_schmidt(&b);
        let m = gs.mu[k][k - 1];
        if gs.bstar[k] >= (delta - m * m) * gs.bstar[k - 1] {
            k += 1;
        } else {
            swap_cols(&mut b, k, k - 1);
            u.swap_cols(k, k - 1);
            k = (k - 1).max(1);
        }
    }
    Ok(Reduced { basis: b, transform: u })
}

/// Lagrange–Gauss reduction in dimension two: the result has |b₁| = λ₁ and |b₂| = λ₂.
pub fn lagrange(input: &Mat<f64>) -> Result<Reduced, ReductionError> {
    assert_eq!(input.n(), 2);
    let mut b = *input;
    let mut u = IntMat::identity(2);
    if col_norm2(&b, 1) < col_norm2(&b, 0) {
        swap_cols(&mut b, 0, 1);
        u.swap_cols(0, 1);
    }
    for _ in 0..10_000 {
        let (b0, b1) = (b.col(0), b.col(1));
        let q = round_coeff(dot(&b0, &b1, 2) / dot(&b0, &b0, 2))?;
        if q != 0 {
            sub_col(&mut b, 1, 0, q);
            u.sub_col_multiple(1, 0, q)?;
        }
        if col_norm2(&b, 1) < col_norm2(&b, 0) {
            swap_cols(&mut b, 0, 1);
            u.swap_cols(0, 1);
        } else {
            return Ok(Reduced { basis: b, transform: u });
        }
    }
    Err(ReductionError::Precondition("Lagrange reduction did not terminate".into()))
}

/// Depth-first enumeration of integer coefficient vectors x with |B(x − τ)|² ≤ r².
pub struct Enumerator<'a> {
    gs: GramSchmidt,
    n: usize,
    center: [f64; MAX_N],
    r2: f64,
    nodes: u64,
    budget: u64,
    symmetric: bool,
    visit: &'a mut dyn FnMut(&[i64], f64) -> f64,
}

impl<'a> Enumerator<'a> {
    /// `visit` receives each coefficient vector with its squared length and returns the new radius²;
    /// a negative radius stops the enumeration.
    /// With `center = None` the origin is excluded and only one of ±x is visited.
    pub fn new(
        basis: &Mat<f64>,
        center: Option<&[f64]>,
        r2: f64,
        budget: u64,
        visit: &'a mut dyn FnMut(&[i64], f64) -> f64,
    ) -> Self {
        let n = basis.n();
        let mut c = [0.0; MAX_N];
        if let Some(t) = center {
            c[..n].copy_from_slice(&t[..n]);
        }
        Enumerator { gs: gram_schmidt(basis), n, center: c, r2, nodes: 0, budget, symmetric: center.is_none(), visit }
    }

    pub fn nodes(&self) -> u64 {
        self.nodes
    }

    pub fn run(&mut self) -> Result<(), ReductionError> {
        let mut x = [0i64; MAX_N];
        self.level(self.n - 1, 0.0, &mut x, true)
    }

    fn level(&mut self, i: usize, partial: f64, x: &mut [i64; MAX_N], zero_above: bool) -> Result<(), ReductionError> {
        let mut c = self.center[i];
        for j in i + 1..self.n {
            c -= self.gs.mu[j][i] * (x[j] as f64 - self.center[j]);
        }
        let rem = self.r2 - partial;
        if rem < 0.0 {
            return Ok(());
        }
        let w = (rem / self.gs.bstar[i]).sqrt();
        let mut lo = (c - w).ceil();
        let hi = (c + w).floor();
        if self.symmetric && zero_above {
            lo = lo.max(0.0);
        }
        if !(lo.abs() < 4.0e18 && hi.abs() < 4.0e18) {
            return Err(ReductionError::Overflow);
        }
        let mut xi = lo as i64;
        let hi = hi as i64;
        while xi <= hi && self.r2 >= 0.0 {
            self.nodes += 1;
            if self.nodes > self.budget {
                return Err(ReductionError::Budget { budget: self.budget });
            }
            let d = xi as f64 - c;
            let l = partial + d * d * self.gs.bstar[i];
            if l <= self.r2 {
                x[i] = xi;
                if i == 0 {
                    let origin = zero_above && xi == 0;
                    if !(self.symmetric && origin) {
                        self.r2 = (self.visit)(&x[..self.n], l);
                    }
                } else {
                    self.level(i - 1, l, x, zero_above && xi == 0)?;
                }
            }
            xi += 1;
        }
        x[i] = 0;
        Ok(())
    }
}

/// Shortest nonzero lattice vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShortVector {
    pub length: f64,
    /// Coefficients with respect to the input basis.
    pub coords: [i64; MAX_N],
}

/// Exact first minimum: LLL (δ = 0.99), then exhaustive enumeration within |b₁|.
pub fn shortest_vector(l: &LatticeBasis, budget: u64) -> Result<ShortVector, ReductionError> {
    let n = l.n();
    let red = if n == 2 { lagrange(l.basis())? } else { lll(l.basis(), LLL_DELTA)? };
    let mut best_x = [0i64; MAX_N];
    best_x[0] = 1;
    let mut best = col_norm2(&red.basis, 0);
    let mut visit = |x: &[i64], _l: f64| -> f64 {
        let v = red.basis.mul_vec(&x.iter().map(|&c| c as f64).collect::<Vec<_>>());
        let len = dot(&v, &v, n);
        if len < best {
            best = len;
            best_x[..n].copy_from_slice(x);
        }
        best * (1.0 + 1e-10)
    };
    let r2 = col_norm2(&red.basis, 0) * (1.0 + 1e-10);
    Enumerator::new(&red.basis, None, r2, budget, &mut visit).run()?;
    let coords = red.transform.mul_vec(&best_x)?;
    let v = l.basis().mul_vec(&coords.iter().map(|&c| c as f64).collect::<Vec<_>>());
    Ok(ShortVector { length: dot(&v, &v, n).sqrt(), coords })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force(b: &Mat<f64>, bound: i64) -> f64 {
        let n = b.n();
        let mut best = f64::INFINITY;
        let range = 2 * bound + 1;
        for idx in 0..range.pow(n as u32) {
            let mut t = idx;
            let x: Vec<f64> = (0..n)
                .map(|_| {
                    let c = t % range - bound;
                    t /= range;
                    c as f64
                })
                .collect();
            if x.iter().all(|c| *c == 0.0) {
                continue;
            }
            let v = b.mul_vec(&x);
            best = best.min(dot(&v, &v, n).sqrt());
        }
        best
    }

    #[test]
    fn standard_lattice() {
        let sv = shortest_vector(&LatticeBasis::new(Mat::identity(3)).unwrap(), DEFAULT_BUDGET).unwrap();
        assert_eq!(sv.length, 1.0);
        assert_eq!(sv.coords.iter().map(|c| c.abs()).sum::<i64>(), 1);
    }

    #[test]
    fn diagonal_lattice() {
        let sv = shortest_vector(&LatticeBasis::new(Mat::diag(&[0.5, 2.0])).unwrap(), DEFAULT_BUDGET).unwrap();
        assert_eq!(sv.length, 0.5);
        assert_eq!(&sv.coords[..2], &[1, 0]);
    }

    #[test]
    fn skewed_lattice_matches_box_search() {
        let b = Mat::from_rows(&[[1.0, 0.9], [0.0, 0.1]]);
        let l = LatticeBasis::normalized(b).unwrap();
        let sv = shortest_vector(&l, DEFAULT_BUDGET).unwrap();
        assert!((sv.length - brute_force(l.basis(), 50)).abs() < 1e-12);
    }

    #[test]
    fn lll_transform_is_consistent() {
        let b = Mat::from_rows(&[[1.0, 7.0, 3.0], [0.0, 1.0, 5.0], [0.0, 0.0, 1.0]]);
        let red = lll(&b, LLL_DELTA).unwrap();
        assert!((b * red.transform.to_mat()).dist_max(&red.basis) < 1e-12);
        assert_eq!(red.transform.det().abs(), 1);
        let gs = gram_schmidt(&red.basis);
        for i in 1..3 {
            for j in 0..i {
                assert!(gs.mu[i][j].abs() <= 0.5 + 1e-12);
            }
            assert!(gs.bstar[i] >= (LLL_DELTA - gs.mu[i][i - 1].powi(2)) * gs.bstar[i - 1] - 1e-12);
        }
    }

    #[test]
    fn budget_is_enforced() {
        let l = LatticeBasis::new(Mat::identity(4)).unwrap();
        assert_eq!(shortest_vector(&l, 3), Err(ReductionError::Budget { budget: 3 }));
    }

    #[test]
    fn enumeration_counts_ball_points() {
        // Z² points with 0 < |x|² ≤ 5, one per ± pair: (1,0),(0,1),(1,1),(1,-1),(2,0),(0,2),(2,±1),(1,±2).
        let mut count = 0;
        let mut visit = |_: &[i64], _: f64| {
            count += 1;
            5.0 + 1e-9
        };
        Enumerator::new(&Mat::identity(2), None, 5.0 + 1e-9, 1000, &mut visit).run().unwrap();
        assert_eq!(count, 10);
    }
}
