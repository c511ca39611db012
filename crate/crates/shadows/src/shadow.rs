//! The chart ι: N·z* → N and shadow distances d_x.
//!
//! Chambers opposite to the standard chamber z are exactly the translates n·z* of the reversed
//! chamber by the unipotent upper-triangular group N, with n unique. ι records log n.

use flatlab_geometry::{opposition_failure, Flag, Mat, Real, SpacePoint};

use crate::error::ShadowError;

/// log n for n ∈ N: a strictly upper-triangular matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnipotentCoord<T> {
    nilpotent: Mat<T>,
}

impl<T: Real> UnipotentCoord<T> {
    pub fn new(nilpotent: Mat<T>) -> Result<Self, ShadowError> {
        let n = nilpotent.n();
        let ok = (0..n).all(|i| (0..=i).all(|j| nilpotent[(i, j)] == T::zero()));
        if !ok || !nilpotent.is_finite() {
            return Err(ShadowError::NotNilpotent);
        }
        Ok(UnipotentCoord { nilpotent })
    }

    /// Coordinates listed row by row above the diagonal.
    pub fn from_entries(n: usize, entries: &[T]) -> Self {
        let mut m = Mat::zeros(n);
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                m[(i, j)] = entries[k];
                k += 1;
            }
        }
        UnipotentCoord { nilpotent: m }
    }

    pub fn entries(&self) -> Vec<T> {
        let n = self.n();
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| self.nilpotent[(i, j)]).collect()
    }

    pub fn nilpotent(&self) -> &Mat<T> {
        &self.nilpotent
    }

    pub fn n(&self) -> usize {
        self.nilpotent.n()
    }

    /// d_N(n) = ‖log n‖ (Frobenius).
    pub fn norm(&self) -> T {
        self.nilpotent.frobenius()
    }

    /// n = exp(log n); the series stops at the (n−1)-th power.
    pub fn exp(&self) -> Mat<T> {
        let n = self.n();
        let mut term = Mat::identity(n);
        let mut sum = Mat::identity(n);
        for k in 1..n {
            term = term.mul_mat(&self.nilpotent).scale(T::one() / T::c(k as f64));
            sum = sum + term;
        }
        strict_upper(&sum, true)
    }

    /// The chamber n·z*.
    pub fn chamber(&self) -> Flag<T> {
        Flag::new(self.exp() * Mat::reversal(self.n())).expect("unipotent times reversal is invertible")
    }
}

/// Upper-triangular part, with the diagonal set to 1 (or 0) exactly.
fn strict_upper<T: Real>(m: &Mat<T>, unit: bool) -> Mat<T> {
    let d = if unit { T::one() } else { T::zero() };
    Mat::from_fn(m.n(), |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Less => m[(i, j)],
        std::cmp::Ordering::Equal => d,
        std::cmp::Ordering::Greater => T::zero(),
    })
}

/// log of a unit upper-triangular matrix; the series stops at the (n−1)-th power.
pub fn log_unipotent<T: Real>(u: &Mat<T>) -> Mat<T> {
    let n = u.n();
    let x = strict_upper(u, false);
    let mut power = Mat::identity(n);
    let mut sum = Mat::zeros(n);
    for k in 1..n {
        power = power.mul_mat(&x);
        let c = if k % 2 == 1 { T::one() } else { -T::one() } / T::c(k as f64);
        sum = sum + power.scale(c);
    }
    strict_upper(&sum, false)
}

/// ι(c) = log n for the unique n ∈ N with c = n·z*.
///
/// With F a frame of c, J·F = L·U (no pivoting) and n = J·L·J; the leading minors of J·F vanish
/// exactly when c fails to be opposite to z.
pub fn iota<T: Real>(c: &Flag<T>) -> Result<UnipotentCoord<T>, ShadowError> {
    let n = c.n();
    if let Some(index) = opposition_failure(&Flag::standard(n), c) {
        return Err(ShadowError::NotOpposite { index });
    }
    let j = Mat::reversal(n);
    let (l, _) = (j * c.canonical()).lu_nopivot(T::c(1e-10)).ok_or(ShadowError::NotOpposite { index: 0 })?;
    Ok(UnipotentCoord { nilpotent: log_unipotent(&(j * l * j)) })
}

/// d_x(c) = ‖ι(g⁻¹·c)‖ with x = [g], g the NA representative of x.
pub fn shadow_distance<T: Real>(x: &SpacePoint<T>, c: &Flag<T>) -> Result<T, ShadowError> {
    let g_inv = x.na_frame().inverse().expect("NA frame is invertible");
    Ok(iota(&c.translate(&g_inv))?.norm())
}

/// c ∈ S_x(r), the open r-shadow of x.
pub fn in_shadow<T: Real>(x: &SpacePoint<T>, c: &Flag<T>, r: T) -> Result<bool, ShadowError> {
    Ok(shadow_distance(x, c)? < r)
}
