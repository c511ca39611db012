//! Dense square matrices of size at most 4, stored inline.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use crate::scalar::Real;

pub const MAX_N: usize = 4;

#[derive(Clone, Copy, PartialEq)]
pub struct Mat<T> {
    n: usize,
    a: [[T; MAX_N]; MAX_N],
}

/// A = U diag(s) Vᵀ with s sorted descending.
#[derive(Clone, Copy, Debug)]
pub struct Svd<T> {
    pub u: Mat<T>,
    pub s: [T; MAX_N],
    pub v: Mat<T>,
}

impl<T: fmt::Debug> fmt::Debug for Mat<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[T]> = (0..self.n).map(|i| &self.a[i][..self.n]).collect();
        write!(f, "Mat{:?}", rows)
    }
}

impl<T: Real> Mat<T> {
    pub fn zeros(n: usize) -> Self {
        assert!((1..=MAX_N).contains(&n), "matrix size {n} unsupported");
        Mat { n, a: [[T::zero(); MAX_N]; MAX_N] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.a[i][j] = f(i, j);
            }
        }
        m
    }

    /// Builds from row-major f64 data.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let n = rows.len();
        Self::from_fn(n, |i, j| T::c(rows[i].as_ref()[j]))
    }

    pub fn diag(d: &[T]) -> Self {
        Self::from_fn(d.len(), |i, j| if i == j { d[i] } else { T::zero() })
    }

    /// The order-reversing permutation matrix.
    pub fn reversal(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i + j + 1 == n { T::one() } else { T::zero() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> [T; MAX_N] {
        self.a[i]
    }

    pub fn col(&self, j: usize) -> [T; MAX_N] {
        let mut c = [T::zero(); MAX_N];
        for i in 0..self.n {
            c[i] = self.a[i][j];
        }
        c
    }

    pub fn set_col(&mut self, j: usize, c: &[T]) {
        for i in 0..self.n {
            self.a[i][j] = c[i];
        }
    }

    pub fn cast<S: Real>(&self) -> Mat<S> {
        Mat::from_fn(self.n, |i, j| S::c(self.a[i][j].f64()))
    }

    pub fn to_f64_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.a[i][j].f64()).collect()).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self.a[j][i])
    }

    pub fn scale(&self, s: T) -> Self {
        Self::from_fn(self.n, |i, j| self.a[i][j] * s)
    }

    /// self · diag(d)
    pub fn scale_cols(&self, d: &[T]) -> Self {
        Self::from_fn(self.n, |i, j| self.a[i][j] * d[j])
    }

    /// diag(d) · self
    pub fn scale_rows(&self, d: &[T]) -> Self {
        Self::from_fn(self.n, |i, j| d[i] * self.a[i][j])
    }

    pub fn trace(&self) -> T {
        (0..self.n).fold(T::zero(), |s, i| s + self.a[i][i])
    }

    pub fn frobenius(&self) -> T {
        let mut s = T::zero();
        for i in 0..self.n {
            for j in 0..self.n {
                s += self.a[i][j] * self.a[i][j];
            }
        }
        s.sqrt()
    }

    pub fn max_abs(&self) -> T {
        let mut m = T::zero();
        for i in 0..self.n {
            for j in 0..self.n {
                m = m.max(self.a[i][j].abs());
            }
        }
        m
    }

    pub fn is_finite(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| self.a[i][j].is_finite()))
    }

    /// Largest |a_ij - a_ji| relative to the largest entry.
    pub fn asymmetry(&self) -> T {
        let scale = self.max_abs().max(T::min_positive_value());
        let mut m = T::zero();
        for i in 0..self.n {
            for j in 0..i {
                m = m.max((self.a[i][j] - self.a[j][i]).abs());
            }
        }
        m / scale
    }

    pub fn symmetrized(&self) -> Self {
        let half = T::c(0.5);
        Self::from_fn(self.n, |i, j| (self.a[i][j] + self.a[j][i]) * half)
    }

    pub fn det(&self) -> T {
        let n = self.n;
        let mut a = self.a;
        let mut det = T::one();
        for k in 0..n {
            let p = (k..n).max_by(|&x, &y| a[x][k].abs().partial_cmp(&a[y][k].abs()).unwrap()).unwrap();
            if a[p][k] == T::zero() {
                return T::zero();
            }
            if p != k {
                a.swap(p, k);
                det = -det;
            }
            det *= a[k][k];
            for i in k + 1..n {
                let f = a[i][k] / a[k][k];
                for j in k..n {
                    let v = a[k][j];
                    a[i][j] -= f * v;
                }
            }
        }
        det
    }

    pub fn inverse(&self) -> Option<Self> {
        let n = self.n;
        let mut a = self.a;
        let mut inv = Self::identity(n).a;
        for k in 0..n {
            let p = (k..n).max_by(|&x, &y| a[x][k].abs().partial_cmp(&a[y][k].abs()).unwrap()).unwrap();
            if a[p][k] == T::zero() || !a[p][k].is_finite() {
                return None;
            }
            a.swap(p, k);
            inv.swap(p, k);
            let d = a[k][k];
            for j in 0..n {
                a[k][j] /= d;
                inv[k][j] /= d;
            }
            for i in 0..n {
                if i != k {
                    let f = a[i][k];
                    if f != T::zero() {
                        for j in 0..n {
                            let (x, y) = (a[k][j], inv[k][j]);
                            a[i][j] -= f * x;
                            inv[i][j] -= f * y;
                        }
                    }
                }
            }
        }
        Some(Mat { n, a: inv })
    }

    /// Eigen-decomposition of a symmetric matrix by cyclic Jacobi.
    /// Returns eigenvalues ascending and the orthogonal matrix of eigenvectors (columns).
    pub fn sym_eigen(&self) -> ([T; MAX_N], Self) {
        let n = self.n;
        let mut a = self.symmetrized().a;
        let mut v = Self::identity(n);
        let eps = T::epsilon();
        for _ in 0..64 {
            let mut rotated = false;
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[p][q];
                    if apq == T::zero() || apq.abs() <= eps * (a[p][p] * a[q][q]).abs().sqrt() * T::c(0.5) {
                        a[p][q] = T::zero();
                        a[q][p] = T::zero();
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (apq + apq);
                    let t = if theta.is_finite() {
                        let t = T::one() / (theta.abs() + (theta * theta + T::one()).sqrt());
                        if theta < T::zero() { -t } else { t }
                    } else {
                        T::zero()
                    };
                    if t == T::zero() {
                        continue;
                    }
                    rotated = true;
                    let c = T::one() / (t * t + T::one()).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let (akp, akq) = (a[k][p], a[k][q]);
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let (apk, aqk) = (a[p][k], a[q][k]);
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                    a[p][q] = T::zero();
                    a[q][p] = T::zero();
                    for k in 0..n {
                        let (vkp, vkq) = (v.a[k][p], v.a[k][q]);
                        v.a[k][p] = c * vkp - s * vkq;
                        v.a[k][q] = s * vkp + c * vkq;
                    }
                }
            }
            if !rotated {
                break;
            }
        }
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&x, &y| a[x][x].partial_cmp(&a[y][y]).unwrap_or(std::cmp::Ordering::Equal));
        let mut vals = [T::zero(); MAX_N];
        let mut vecs = Self::zeros(n);
        for (k, &i) in idx.iter().enumerate() {
            vals[k] = a[i][i];
            for r in 0..n {
                vecs.a[r][k] = v.a[r][i];
            }
        }
        (vals, vecs)
    }

    /// One-sided Jacobi SVD acting on columns; accurate for column-graded input.
    pub fn svd(&self) -> Svd<T> {
        let n = self.n;
        let mut u = *self;
        let mut v = Self::identity(n);
        let eps = T::epsilon();
        for _ in 0..80 {
            let mut rotated = false;
            for p in 0..n {
                for q in p + 1..n {
                    let (mut alpha, mut beta, mut gamma) = (T::zero(), T::zero(), T::zero());
                    for k in 0..n {
                        alpha += u.a[k][p] * u.a[k][p];
                        beta += u.a[k][q] * u.a[k][q];
                        gamma += u.a[k][p] * u.a[k][q];
                    }
                    if gamma == T::zero() || gamma.abs() <= eps * alpha.sqrt() * beta.sqrt() {
                        continue;
                    }
                    let zeta = (beta - alpha) / (gamma + gamma);
                    if !zeta.is_finite() {
                        continue;
                    }
                    let t = T::one() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                    let t = if zeta < T::zero() { -t } else { t };
                    let c = T::one() / (T::one() + t * t).sqrt();
                    let s = c * t;
                    rotated = true;
                    for m in [&mut u, &mut v] {
                        for k in 0..n {
                            let (xp, xq) = (m.a[k][p], m.a[k][q]);
                            m.a[k][p] = c * xp - s * xq;
                            m.a[k][q] = s * xp + c * xq;
                        }
                    }
                }
            }
            if !rotated {
                break;
            }
        }
        let mut sig = [T::zero(); MAX_N];
        for j in 0..n {
            let norm = (0..n).fold(T::zero(), |s, k| s + u.a[k][j] * u.a[k][j]).sqrt();
            sig[j] = norm;
            if norm > T::zero() {
                for k in 0..n {
                    u.a[k][j] /= norm;
                }
            }
        }
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&x, &y| sig[y].partial_cmp(&sig[x]).unwrap_or(std::cmp::Ordering::Equal));
        let mut out = Svd { u: Self::zeros(n), s: [T::zero(); MAX_N], v: Self::zeros(n) };
        for (k, &j) in idx.iter().enumerate() {
            out.s[k] = sig[j];
            for r in 0..n {
                out.u.a[r][k] = u.a[r][j];
                out.v.a[r][k] = v.a[r][j];
            }
        }
        out
    }

    pub fn singular_values(&self) -> [T; MAX_N] {
        self.svd().s
    }

    /// Ratio of extreme singular values.
    pub fn cond(&self) -> T {
        let s = self.singular_values();
        s[0] / s[self.n - 1]
    }

    /// Lower-triangular L with self = L Lᵀ.
    pub fn cholesky(&self) -> Option<Self> {
        let n = self.n;
        let mut l = Self::zeros(n);
        for j in 0..n {
            let mut d = self.a[j][j];
            for k in 0..j {
                d -= l.a[j][k] * l.a[j][k];
            }
            if d.partial_cmp(&T::zero()) != Some(std::cmp::Ordering::Greater) {
                return None;
            }
            let d = d.sqrt();
            l.a[j][j] = d;
            for i in j + 1..n {
                let mut s = self.a[i][j];
                for k in 0..j {
                    s -= l.a[i][k] * l.a[j][k];
                }
                l.a[i][j] = s / d;
            }
        }
        Some(l)
    }

    /// self = Q R with Q orthogonal and R upper-triangular with nonnegative diagonal.
    pub fn qr(&self) -> (Self, Self) {
        let n = self.n;
        let mut q = Self::zeros(n);
        let mut r = Self::zeros(n);
        for j in 0..n {
            let mut v = self.col(j);
            for _ in 0..2 {
                for i in 0..j {
                    let mut dot = T::zero();
                    for k in 0..n {
                        dot += q.a[k][i] * v[k];
                    }
                    r.a[i][j] += dot;
                    for k in 0..n {
                        v[k] -= dot * q.a[k][i];
                    }
                }
            }
            let norm = (0..n).fold(T::zero(), |s, k| s + v[k] * v[k]).sqrt();
            r.a[j][j] = norm;
            for k in 0..n {
                q.a[k][j] = if norm > T::zero() { v[k] / norm } else { T::zero() };
            }
        }
        (q, r)
    }

    /// self = R Q with R upper-triangular (positive diagonal) and Q orthogonal.
    pub fn rq(&self) -> (Self, Self) {
        let j = Self::reversal(self.n);
        let (q1, r1) = (*self).transpose().mul_mat(&j).qr();
        let r = j.mul_mat(&r1.transpose()).mul_mat(&j);
        let q = j.mul_mat(&q1.transpose());
        (r, q)
    }

    /// Doolittle factorization self = L U without pivoting; `None` when a pivot falls below
    /// `tol` times the scale of the matrix.
    pub fn lu_nopivot(&self, tol: T) -> Option<(Self, Self)> {
        let n = self.n;
        let scale = self.max_abs();
        let mut l = Self::identity(n);
        let mut u = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                let mut s = self.a[i][j];
                for k in 0..i {
                    s -= l.a[i][k] * u.a[k][j];
                }
                u.a[i][j] = s;
            }
            if u.a[i][i].abs() <= tol * scale {
                return None;
            }
            for j in i + 1..n {
                let mut s = self.a[j][i];
                for k in 0..i {
                    s -= l.a[j][k] * u.a[k][i];
                }
                l.a[j][i] = s / u.a[i][i];
            }
        }
        Some((l, u))
    }

    /// Matrix exponential by scaling and squaring.
    pub fn expm(&self) -> Self {
        let norm = self.frobenius();
        let mut squarings = 0;
        let mut scaled = *self;
        if norm > T::c(0.5) {
            squarings = (norm / T::c(0.5)).log2().ceil().to_i32().unwrap_or(0).max(0);
            scaled = self.scale(T::c(0.5f64.powi(squarings)));
        }
        let n = self.n;
        let mut term = Self::identity(n);
        let mut sum = Self::identity(n);
        for k in 1..30 {
            term = term.mul_mat(&scaled).scale(T::one() / T::c(k as f64));
            sum = sum + term;
            if term.max_abs() <= T::epsilon() * sum.max_abs() {
                break;
            }
        }
        for _ in 0..squarings {
            sum = sum.mul_mat(&sum);
        }
        sum
    }

    /// f applied to the eigenvalues of a symmetric matrix.
    pub fn sym_apply(&self, f: impl Fn(T) -> T) -> Self {
        let (vals, v) = self.sym_eigen();
        let mut fv = [T::zero(); MAX_N];
        for i in 0..self.n {
            fv[i] = f(vals[i]);
        }
        v.scale_cols(&fv[..self.n]).mul_mat(&v.transpose()).symmetrized()
    }

    pub fn mul_mat(&self, b: &Self) -> Self {
        let n = self.n;
        debug_assert_eq!(n, b.n);
        let mut c = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self.a[i][k];
                for j in 0..n {
                    c.a[i][j] += aik * b.a[k][j];
                }
            }
        }
        c
    }

    pub fn mul_vec(&self, x: &[T]) -> [T; MAX_N] {
        let mut y = [T::zero(); MAX_N];
        for i in 0..self.n {
            for j in 0..self.n {
                y[i] += self.a[i][j] * x[j];
            }
        }
        y
    }

    pub fn dist_max(&self, other: &Self) -> T {
        (*self - *other).max_abs()
    }
}

impl<T> Index<(usize, usize)> for Mat<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.a[i][j]
    }
}

impl<T> IndexMut<(usize, usize)> for Mat<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.a[i][j]
    }
}

impl<T: Real> Mul for Mat<T> {
    type Output = Mat<T>;
    fn mul(self, rhs: Self) -> Self {
        self.mul_mat(&rhs)
    }
}

impl<T: Real> Add for Mat<T> {
    type Output = Mat<T>;
    fn add(self, rhs: Self) -> Self {
        Self::from_fn(self.n, |i, j| self.a[i][j] + rhs.a[i][j])
    }
}

impl<T: Real> Sub for Mat<T> {
    type Output = Mat<T>;
    fn sub(self, rhs: Self) -> Self {
        Self::from_fn(self.n, |i, j| self.a[i][j] - rhs.a[i][j])
    }
}

impl<T: Real> Neg for Mat<T> {
    type Output = Mat<T>;
    fn neg(self) -> Self {
        self.scale(-T::one())
    }
}

pub fn dot<T: Real>(x: &[T], y: &[T]) -> T {
    x.iter().zip(y).fold(T::zero(), |s, (a, b)| s + *a * *b)
}

pub fn norm<T: Real>(x: &[T]) -> T {
    dot(x, x).sqrt()
}
