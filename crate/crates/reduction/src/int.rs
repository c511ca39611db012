//! Small integer matrices with overflow-checked arithmetic.

use std::fmt;

use flatlab_geometry::{Mat, MAX_N};

use crate::error::ReductionError;

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct IntMat {
    n: usize,
    a: [[i64; MAX_N]; MAX_N],
}

impl fmt::Debug for IntMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[i64]> = (0..self.n).map(|i| &self.a[i][..self.n]).collect();
        write!(f, "IntMat{:?}", rows)
    }
}

fn overflow() -> ReductionError {
    ReductionError::Overflow
}

impl IntMat {
    pub fn zeros(n: usize) -> Self {
        assert!((1..=MAX_N).contains(&n), "matrix size {n} unsupported");
        IntMat { n, a: [[0; MAX_N]; MAX_N] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| i64::from(i == j))
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> i64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.a[i][j] = f(i, j);
            }
        }
        m
    }

    pub fn from_rows<R: AsRef<[i64]>>(rows: &[R]) -> Self {
        let n = rows.len();
        Self::from_fn(n, |i, j| rows[i].as_ref()[j])
    }

    /// Permutation matrix with ones at (i, perm[i]).
    pub fn permutation(perm: &[usize]) -> Self {
        Self::from_fn(perm.len(), |i, j| i64::from(perm[i] == j))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.a[i][j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: i64) {
        self.a[i][j] = v;
    }

    pub fn col(&self, j: usize) -> [i64; MAX_N] {
        let mut c = [0; MAX_N];
        for (i, ci) in c.iter_mut().enumerate().take(self.n) {
            *ci = self.a[i][j];
        }
        c
    }

    pub fn set_col(&mut self, j: usize, c: &[i64]) {
        for (i, &v) in c.iter().enumerate().take(self.n) {
            self.a[i][j] = v;
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self.a[j][i])
    }

    pub fn to_mat(&self) -> Mat<f64> {
        Mat::from_fn(self.n, |i, j| self.a[i][j] as f64)
    }

    pub fn max_abs(&self) -> i64 {
        (0..self.n).flat_map(|i| (0..self.n).map(move |j| (i, j))).map(|(i, j)| self.a[i][j].abs()).max().unwrap_or(0)
    }

    pub fn swap_cols(&mut self, i: usize, j: usize) {
        for r in 0..self.n {
            self.a[r].swap(i, j);
        }
    }

    pub fn negate_col(&mut self, j: usize) {
        for r in 0..self.n {
            self.a[r][j] = -self.a[r][j];
        }
    }

    pub fn negate_row(&mut self, i: usize) {
        for v in self.a[i].iter_mut() {
            *v = -*v;
        }
    }

    /// col_dst -= q · col_src.
    pub fn sub_col_multiple(&mut self, dst: usize, src: usize, q: i64) -> Result<(), ReductionError> {
        for r in 0..self.n {
            let t = self.a[r][src].checked_mul(q).ok_or_else(overflow)?;
            self.a[r][dst] = self.a[r][dst].checked_sub(t).ok_or_else(overflow)?;
        }
        Ok(())
    }

    pub fn mul(&self, other: &Self) -> Result<Self, ReductionError> {
        let n = self.n;
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut s: i128 = 0;
                for k in 0..n {
                    s += self.a[i][k] as i128 * other.a[k][j] as i128;
                }
                m.a[i][j] = i64::try_from(s).map_err(|_| overflow())?;
            }
        }
        Ok(m)
    }

    pub fn mul_vec(&self, x: &[i64]) -> Result<[i64; MAX_N], ReductionError> {
        let mut out = [0; MAX_N];
        for (i, o) in out.iter_mut().enumerate().take(self.n) {
            let s: i128 = (0..self.n).map(|k| self.a[i][k] as i128 * x[k] as i128).sum();
            *o = i64::try_from(s).map_err(|_| overflow())?;
        }
        Ok(out)
    }

    fn minor(&self, row: usize, col: usize) -> Self {
        let n = self.n - 1;
        Self::from_fn(n, |i, j| self.a[if i < row { i } else { i + 1 }][if j < col { j } else { j + 1 }])
    }

    /// Exact determinant by cofactor expansion.
    pub fn det(&self) -> i128 {
        match self.n {
            1 => self.a[0][0] as i128,
            2 => self.a[0][0] as i128 * self.a[1][1] as i128 - self.a[0][1] as i128 * self.a[1][0] as i128,
            _ => (0..self.n)
                .map(|j| {
                    let sign = if j % 2 == 0 { 1 } else { -1 };
                    sign * self.a[0][j] as i128 * self.minor(0, j).det()
                })
                .sum(),
        }
    }

    /// Inverse of a unimodular matrix via the adjugate.
    pub fn inverse_unimodular(&self) -> Result<Self, ReductionError> {
        let det = self.det();
        if det != 1 && det != -1 {
            return Err(ReductionError::Precondition(format!("integer matrix has determinant {det}")));
        }
        let n = self.n;
        if n == 1 {
            return Ok(Self::from_fn(1, |_, _| self.a[0][0]));
        }
        let mut inv = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let sign = if (i + j) % 2 == 0 { 1 } else { -1 };
                let c = sign * self.minor(j, i).det() * det;
                inv.a[i][j] = i64::try_from(c).map_err(|_| overflow())?;
            }
        }
        Ok(inv)
    }
}

pub fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.unsigned_abs(), b.unsigned_abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a as i64
}

/// (g, x, y) with a·x + b·y = g = gcd(a, b) ≥ 0.
pub fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    let (mut r0, mut r1) = (a as i128, b as i128);
    let (mut s0, mut s1) = (1i128, 0i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0.div_euclid(r1);
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 < 0 {
        (r0, s0, t0) = (-r0, -s0, -t0);
    }
    (r0 as i64, s0 as i64, t0 as i64)
}
