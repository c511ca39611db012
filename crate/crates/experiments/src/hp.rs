//! Extended-precision frames for points far out in the cusp.
//!
//! A frame h·exp(diag v) with large v has a condition number that double precision cannot hold,
//! so the lattice it spans is lost as soon as it is rounded. Such a point is kept instead as
//! [U⁻¹·C]: U is an exact unimodular integer matrix found by LLL in MPFR arithmetic and C = U·M is
//! reduced, hence well conditioned, and rounded to f64 only at the end.

use std::fmt;

use flatlab_geometry::{log_sv_norm, Mat};
use flatlab_reduction::{
    cusp_excursion_of, retract_frame, CuspExcursion, Input, ReductionError, ReductionOptions, Retraction, ThickParams,
};
use rug::{Float, Integer};

use crate::error::ExperimentError;

/// Bits of working precision for frames whose log-spread (log of the ratio of largest to
/// smallest singular value) is at most `log_spread`.
pub fn precision_for(log_spread: f64) -> u32 {
    let bits = (log_spread.max(0.0) / std::f64::consts::LN_2).ceil() as u32;
    (128 + 4 * bits).min(1 << 14)
}

#[derive(Clone, PartialEq)]
pub struct HpFrame {
    n: usize,
    prec: u32,
    a: Vec<Float>,
}

impl fmt::Debug for HpFrame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HpFrame({} bits, {:?})", self.prec, self.to_f64())
    }
}

impl HpFrame {
    pub fn from_mat(m: &Mat<f64>, prec: u32) -> Self {
        let n = m.n();
        let a = (0..n * n).map(|k| Float::with_val(prec, m[(k / n, k % n)])).collect();
        HpFrame { n, prec, a }
    }

    /// m₁·m₂·…·exp(diag v), with enough precision for the spread of v and of the factors.
    pub fn product(factors: &[&Mat<f64>], v: &[f64]) -> Self {
        let n = v.len();
        let spread = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - v.iter().cloned().fold(f64::INFINITY, f64::min);
        let cond: f64 = factors.iter().map(|m| m.cond().max(1.0).ln()).sum();
        let prec = precision_for(spread + cond + 1.0);
        let mut acc = HpFrame::from_mat(&Mat::identity(n), prec);
        for m in factors {
            acc = acc.mul(&HpFrame::from_mat(m, prec));
        }
        acc.scaled(v)
    }

    /// Row-major entries, all at precision `prec`.
    pub fn from_floats(n: usize, prec: u32, a: Vec<Float>) -> Self {
        assert_eq!(a.len(), n * n);
        HpFrame { n, prec, a: a.into_iter().map(|x| Float::with_val(prec, x)).collect() }
    }

    pub fn from_int(u: &IntTransform, prec: u32) -> Self {
        HpFrame { n: u.n, prec, a: u.a.iter().map(|x| Float::with_val(prec, x)).collect() }
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        HpFrame { n, prec: self.prec, a: (0..n * n).map(|k| self.a[(k % n) * n + k / n].clone()).collect() }
    }

    /// self·exp(diag v).
    pub fn scaled(&self, v: &[f64]) -> Self {
        let n = self.n;
        let mut a = self.a.clone();
        for (j, vj) in v.iter().enumerate() {
            let e = Float::with_val(self.prec, *vj).exp();
            for i in 0..n {
                a[i * n + j] *= &e;
            }
        }
        HpFrame { n, prec: self.prec, a }
    }

    /// The flat point h·exp(diag v).
    pub fn flat_point(h: &Mat<f64>, v: &[f64]) -> Self {
        Self::product(&[h], v)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn mul(&self, other: &HpFrame) -> HpFrame {
        let n = self.n;
        let prec = self.prec.max(other.prec);
        let mut a = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut s = Float::with_val(prec, 0);
                for k in 0..n {
                    s += &self.a[i * n + k] * &other.a[k * n + j];
                }
                a.push(s);
            }
        }
        HpFrame { n, prec, a }
    }

    /// U·self.
    pub fn mul_left(&self, u: &IntTransform) -> HpFrame {
        let n = self.n;
        let mut a = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut s = Float::with_val(self.prec, 0);
                for k in 0..n {
                    s += Float::with_val(self.prec, &u.a[i * n + k]) * &self.a[k * n + j];
                }
                a.push(s);
            }
        }
        HpFrame { n, prec: self.prec, a }
    }

    pub fn to_f64(&self) -> Mat<f64> {
        Mat::from_fn(self.n, |i, j| self.a[i * self.n + j].to_f64())
    }

    fn row(&self, i: usize) -> Vec<Float> {
        self.a[i * self.n..(i + 1) * self.n].to_vec()
    }
}

/// Exact integer matrix of determinant ±1.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntTransform {
    n: usize,
    a: Vec<Integer>,
}

impl fmt::Debug for IntTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[Integer]> = (0..self.n).map(|i| &self.a[i * self.n..(i + 1) * self.n]).collect();
        write!(f, "IntTransform{:?}", rows)
    }
}

impl IntTransform {
    pub fn identity(n: usize) -> Self {
        IntTransform { n, a: (0..n * n).map(|k| Integer::from(u8::from(k / n == k % n))).collect() }
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Self {
        let n = rows.len();
        IntTransform { n, a: rows.iter().flat_map(|r| r.iter().map(|&x| Integer::from(x))).collect() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &Integer {
        &self.a[i * self.n + j]
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.n)
    }

    pub fn mul(&self, other: &IntTransform) -> IntTransform {
        let n = self.n;
        let mut a = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut s = Integer::new();
                for k in 0..n {
                    s += &self.a[i * n + k] * &other.a[k * n + j];
                }
                a.push(s);
            }
        }
        IntTransform { n, a }
    }

    fn minor(&self, row: usize, col: usize) -> IntTransform {
        let m = self.n - 1;
        let mut a = Vec::with_capacity(m * m);
        for i in (0..self.n).filter(|&i| i != row) {
            for j in (0..self.n).filter(|&j| j != col) {
                a.push(self.a[i * self.n + j].clone());
            }
        }
        IntTransform { n: m, a }
    }

    pub fn det(&self) -> Integer {
        match self.n {
            1 => self.a[0].clone(),
            n => {
                let mut s = Integer::new();
                for j in 0..n {
                    let term = Integer::from(&self.a[j] * &self.minor(0, j).det());
                    if j % 2 == 0 {
                        s += term;
                    } else {
                        s -= term;
                    }
                }
                s
            }
        }
    }

    /// Inverse through the adjugate.
    pub fn inverse(&self) -> IntTransform {
        let n = self.n;
        let det = self.det();
        assert!(det == 1 || det == -1, "transform is not unimodular");
        if n == 1 {
            return self.clone();
        }
        let mut a = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut c = self.minor(j, i).det() * &det;
                if (i + j) % 2 == 1 {
                    c = -c;
                }
                a.push(c);
            }
        }
        IntTransform { n, a }
    }

    pub fn to_f64(&self) -> Mat<f64> {
        Mat::from_fn(self.n, |i, j| self.a[i * self.n + j].to_f64())
    }

    /// Bit length of the largest entry.
    pub fn max_bits(&self) -> u32 {
        self.a.iter().map(|x| x.significant_bits()).max().unwrap_or(0)
    }
}

const HP_LLL_DELTA: f64 = 0.75;
const HP_LLL_MAX_STEPS: usize = 1_000_000;

fn dot(x: &[Float], y: &[Float], prec: u32) -> Float {
    let mut s = Float::with_val(prec, 0);
    for (p, q) in x.iter().zip(y) {
        s += p * q;
    }
    s
}

/// Gram–Schmidt coefficients μ_ij (j < i) and squared lengths |b*_i|² of the rows of b.
fn gram_schmidt(b: &[Vec<Float>], prec: u32) -> (Vec<Vec<Float>>, Vec<Float>) {
    let n = b.len();
    let mut star: Vec<Vec<Float>> = Vec::with_capacity(n);
    let mut mu = vec![vec![Float::with_val(prec, 0); n]; n];
    let mut norms: Vec<Float> = Vec::with_capacity(n);
    for i in 0..n {
        let mut v = b[i].clone();
        for j in 0..i {
            let m = Float::with_val(prec, dot(&b[i], &star[j], prec) / &norms[j]);
            for (vk, sk) in v.iter_mut().zip(&star[j]) {
                *vk -= &m * sk;
            }
            mu[i][j] = m;
        }
        norms.push(dot(&v, &v, prec));
        star.push(v);
    }
    (mu, norms)
}

/// LLL on the rows of b, applying the same integer row operations to u.
fn lll_rows(b: &mut [Vec<Float>], u: &mut IntTransform, prec: u32) -> Result<(), ExperimentError> {
    let n = b.len();
    let (mut mu, mut norms) = gram_schmidt(b, prec);
    let mut k = 1;
    let mut steps = 0;
    while k < n {
        steps += 1;
        if steps > HP_LLL_MAX_STEPS {
            return Err(ExperimentError::Precision("extended-precision LLL did not terminate".into()));
        }
        let mut changed = false;
        for j in (0..k).rev() {
            let q = mu[k][j].to_integer().ok_or_else(|| ExperimentError::Precision("non-finite Gram–Schmidt coefficient".into()))?;
            if q == 0 {
                continue;
            }
            changed = true;
            let qf = Float::with_val(prec, &q);
            let (head, tail) = b.split_at_mut(k);
            for (x, y) in tail[0].iter_mut().zip(&head[j]) {
                *x -= &qf * y;
            }
            for l in 0..n {
                let t = Integer::from(&q * &u.a[j * n + l]);
                u.a[k * n + l] -= t;
            }
            for l in 0..j {
                let t = Float::with_val(prec, &qf * &mu[j][l]);
                mu[k][l] -= t;
            }
            mu[k][j] -= &qf;
        }
        if changed {
            (mu, norms) = gram_schmidt(b, prec);
        }
        let m2 = Float::with_val(prec, &mu[k][k - 1] * &mu[k][k - 1]);
        let rhs = Float::with_val(prec, HP_LLL_DELTA - m2) * &norms[k - 1];
        if norms[k] >= rhs {
            k += 1;
        } else {
            b.swap(k, k - 1);
            for l in 0..n {
                u.a.swap(k * n + l, (k - 1) * n + l);
            }
            (mu, norms) = gram_schmidt(b, prec);
            k = (k - 1).max(1);
        }
    }
    Ok(())
}

/// A point [U⁻¹·frame] with U unimodular and frame reduced.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedPoint {
    pub u: IntTransform,
    pub frame: Mat<f64>,
}

impl ReducedPoint {
    /// A point whose frame is already fine in double precision.
    pub fn from_frame(frame: Mat<f64>) -> Self {
        ReducedPoint { u: IntTransform::identity(frame.n()), frame }
    }

    /// Reduces [m], starting from the transform `warm` when given (e.g. that of a nearby point).
    pub fn reduce(m: &HpFrame, warm: Option<&IntTransform>) -> Result<Self, ExperimentError> {
        let n = m.n();
        let mut u = warm.cloned().unwrap_or_else(|| IntTransform::identity(n));
        let start = m.mul_left(&u);
        let mut rows: Vec<Vec<Float>> = (0..n).map(|i| start.row(i)).collect();
        lll_rows(&mut rows, &mut u, m.prec())?;
        if u.det() < 0 {
            // Same lattice; keeps U in SL_n(Z).
            for l in 0..n {
                let x = -std::mem::take(&mut u.a[(n - 1) * n + l]);
                u.a[(n - 1) * n + l] = x;
            }
        }
        // U·M = L·D·Q with L unit lower triangular and D diagonal; [U·M] = [L·D], and the triangular
        // form keeps its tiny and huge entries apart, so double precision represents it faithfully.
        let reduced = m.mul_left(&u);
        let rows: Vec<Vec<Float>> = (0..n).map(|i| reduced.row(i)).collect();
        let (mu, norms) = gram_schmidt(&rows, m.prec());
        let d: Vec<f64> = norms.iter().map(|x| x.clone().sqrt().to_f64()).collect();
        let frame = Mat::from_fn(n, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Greater => mu[i][j].to_f64() * d[j],
            std::cmp::Ordering::Equal => d[i],
            std::cmp::Ordering::Less => 0.0,
        });
        if !frame.is_finite() {
            return Err(ExperimentError::Precision("reduced frame is not finite".into()));
        }
        Ok(ReducedPoint { u, frame })
    }

    pub fn n(&self) -> usize {
        self.frame.n()
    }

    pub fn excursion(&self, opts: &ReductionOptions) -> Result<CuspExcursion, ReductionError> {
        cusp_excursion_of(Input::Frame(&self.frame), opts)
    }

    /// The retraction is applied to the reduced frame and carried back by U⁻¹.
    pub fn retract(&self, params: &ThickParams, opts: &ReductionOptions) -> Result<(ReducedPoint, Retraction), ReductionError> {
        let r = retract_frame(&self.frame, params, opts)?;
        Ok((ReducedPoint { u: self.u.clone(), frame: r.frame }, r))
    }

    /// d([U_a⁻¹F_a], [U_b⁻¹F_b]) = ‖log σ(F_a⁻¹·U_a·U_b⁻¹·F_b)‖.
    pub fn distance(&self, other: &ReducedPoint) -> f64 {
        let w = self.u.mul(&other.u.inverse());
        let fa = self.frame.inverse().expect("reduced frame is invertible");
        let log_cond = self.frame.cond().ln() + other.frame.cond().ln();
        let bits = w.max_bits() as f64 + log_cond / std::f64::consts::LN_2;
        if bits <= DISTANCE_F64_BITS {
            return log_sv_norm(&(fa * w.to_f64() * other.frame));
        }
        // The product has singular values up to e^{±d} and cancels heavily in double precision.
        let n = self.n();
        let prec = 128 + 4 * bits.ceil() as u32;
        let m = lower_inverse(&self.frame, prec).mul(&HpFrame::from_int(&w, prec)).mul(&HpFrame::from_mat(&other.frame, prec));
        let gram = m.mul(&m.transpose());
        let eig = jacobi_eigenvalues(gram);
        eig.iter().take(n).map(|l| 0.25 * l.clone().ln().to_f64().powi(2)).sum::<f64>().sqrt()
    }
}

/// Distances whose relative transform and frames span at most this many bits are computed in
/// double precision.
const DISTANCE_F64_BITS: f64 = 10.0;
const JACOBI_MAX_SWEEPS: usize = 60;

/// Inverse of a lower-triangular frame by forward substitution.
fn lower_inverse(f: &Mat<f64>, prec: u32) -> HpFrame {
    let n = f.n();
    let mut a: Vec<Float> = (0..n * n).map(|_| Float::with_val(prec, 0)).collect();
    for j in 0..n {
        for i in j..n {
            let mut s = Float::with_val(prec, u8::from(i == j));
            for k in j..i {
                s -= Float::with_val(prec, f[(i, k)]) * &a[k * n + j];
            }
            a[i * n + j] = s / f[(i, i)];
        }
    }
    HpFrame { n, prec, a }
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, run until every off-diagonal
/// entry is negligible against the geometric mean of its two diagonal entries.
fn jacobi_eigenvalues(mut m: HpFrame) -> Vec<Float> {
    let (n, prec) = (m.n, m.prec);
    let tol = Float::with_val(prec, Float::i_exp(1, -(prec as i32 - 16)));
    let idx = |i: usize, j: usize| i * n + j;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let apq = m.a[idx(p, q)].clone();
                let scale = Float::with_val(prec, &m.a[idx(p, p)] * &m.a[idx(q, q)]).abs().sqrt();
                if Float::with_val(prec, apq.abs_ref()) <= Float::with_val(prec, &tol * &scale) {
                    continue;
                }
                rotated = true;
                let theta = Float::with_val(prec, &m.a[idx(q, q)] - &m.a[idx(p, p)]) / (Float::with_val(prec, 2) * &apq);
                let root = (Float::with_val(prec, theta.square_ref()) + 1u32).sqrt();
                let t = if theta.is_sign_negative() {
                    -Float::with_val(prec, 1) / (root - &theta)
                } else {
                    Float::with_val(prec, 1) / (root + &theta)
                };
                let c = (Float::with_val(prec, t.square_ref()) + 1u32).sqrt().recip();
                let s = Float::with_val(prec, &t * &c);
                for k in 0..n {
                    let (mkp, mkq) = (m.a[idx(k, p)].clone(), m.a[idx(k, q)].clone());
                    m.a[idx(k, p)] = Float::with_val(prec, &c * &mkp) - Float::with_val(prec, &s * &mkq);
                    m.a[idx(k, q)] = Float::with_val(prec, &s * &mkp) + Float::with_val(prec, &c * &mkq);
                }
                for k in 0..n {
                    let (mpk, mqk) = (m.a[idx(p, k)].clone(), m.a[idx(q, k)].clone());
                    m.a[idx(p, k)] = Float::with_val(prec, &c * &mpk) - Float::with_val(prec, &s * &mqk);
                    m.a[idx(q, k)] = Float::with_val(prec, &s * &mpk) + Float::with_val(prec, &c * &mqk);
                }
            }
        }
        if !rotated {
            break;
        }
    }
    (0..n).map(|i| m.a[idx(i, i)].clone()).collect()
}

/// Largest |log σ| spread a frame may have before it needs extended precision.
pub const F64_LOG_SPREAD: f64 = 8.0;

/// Reduced representative of [m₁·…·exp(diag v)], in double precision when that is safe.
pub fn reduced_point(factors: &[&Mat<f64>], v: &[f64], warm: Option<&IntTransform>) -> Result<ReducedPoint, ExperimentError> {
    let spread = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - v.iter().cloned().fold(f64::INFINITY, f64::min);
    let cond: f64 = factors.iter().map(|m| m.cond().max(1.0).ln()).sum();
    if warm.is_none() && spread + cond <= F64_LOG_SPREAD {
        let n = v.len();
        let mut m = Mat::identity(n);
        for f in factors {
            m = m * **f;
        }
        let e: Vec<f64> = v.iter().map(|x| x.exp()).collect();
        return Ok(ReducedPoint::from_frame(m.scale_cols(&e)));
    }
    ReducedPoint::reduce(&HpFrame::product(factors, v), warm)
}


/// Cusp excursion of [m₁·…·exp(diag v)].
pub fn excursion_at(factors: &[&Mat<f64>], v: &[f64], opts: &ReductionOptions) -> Result<f64, ExperimentError> {
    Ok(reduced_point(factors, v, None)?.excursion(opts)?.value)
}
