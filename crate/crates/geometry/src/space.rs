use crate::error::GeometryError;
use crate::mat::{Mat, MAX_N};
use crate::scalar::Real;

/// Element of SL_n(R).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroupElement<T> {
    m: Mat<T>,
}

impl<T: Real> GroupElement<T> {
    pub fn new(m: Mat<T>) -> Result<Self, GeometryError> {
        if !m.is_finite() {
            return Err(GeometryError::NotGroupElement("non-finite entry".into()));
        }
        let det = m.det();
        if (det - T::one()).abs() > T::tol(1e-9) {
            return Err(GeometryError::NotGroupElement(format!("determinant {det}")));
        }
        Ok(GroupElement { m })
    }

    /// Rescales an invertible matrix with positive determinant into SL_n.
    pub fn normalized(m: Mat<T>) -> Result<Self, GeometryError> {
        let det = m.det();
        if !(det > T::zero()) || !det.is_finite() {
            return Err(GeometryError::NotGroupElement(format!("determinant {det}")));
        }
        let s = det.powf(-T::one() / T::c(m.n() as f64));
        Self::new(m.scale(s))
    }

    pub fn identity(n: usize) -> Self {
        GroupElement { m: Mat::identity(n) }
    }

    pub fn matrix(&self) -> &Mat<T> {
        &self.m
    }

    pub fn n(&self) -> usize {
        self.m.n()
    }

    pub fn inverse(&self) -> Self {
        GroupElement { m: self.m.inverse().expect("group elements are invertible") }
    }

    pub fn compose(&self, other: &Self) -> Self {
        GroupElement { m: self.m * other.m }
    }

    /// The point [g] = g·gᵀ.
    pub fn point(&self) -> SpacePoint<T> {
        SpacePoint::from_frame(&self.m)
    }
}

/// Point of X stored as a unit-determinant SPD form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpacePoint<T> {
    form: Mat<T>,
}

impl<T: Real> SpacePoint<T> {
    pub fn new(form: Mat<T>) -> Result<Self, GeometryError> {
        if !form.is_finite() {
            return Err(GeometryError::Domain("non-finite entry".into()));
        }
        if form.asymmetry() > T::tol(1e-12) {
            return Err(GeometryError::Domain("form is not symmetric".into()));
        }
        let form = form.symmetrized();
        if form.cholesky().is_none() {
            return Err(GeometryError::Domain("form is not positive definite".into()));
        }
        let det = form.det();
        let hadamard = (0..form.n()).fold(T::one(), |p, i| p * form[(i, i)]);
        if (det - T::one()).abs() > T::tol(1e-9) * hadamard.max(T::one()) {
            return Err(GeometryError::Domain(format!("determinant {det}")));
        }
        Ok(SpacePoint { form })
    }

    pub fn identity(n: usize) -> Self {
        SpacePoint { form: Mat::identity(n) }
    }

    /// [g] for any frame g with |det g| = 1.
    pub fn from_frame(g: &Mat<T>) -> Self {
        SpacePoint { form: (*g * g.transpose()).symmetrized() }
    }

    pub fn form(&self) -> &Mat<T> {
        &self.form
    }

    pub fn n(&self) -> usize {
        self.form.n()
    }

    /// Lower-triangular representative g with g·gᵀ = form.
    pub fn frame(&self) -> Mat<T> {
        self.form.cholesky().expect("validated SPD form")
    }

    /// The unique representative in NA (upper-triangular, positive diagonal).
    pub fn na_frame(&self) -> Mat<T> {
        self.frame().rq().0
    }

    /// g·x = [g·frame].
    pub fn translate(&self, g: &Mat<T>) -> Self {
        SpacePoint { form: (*g * self.form * g.transpose()).symmetrized() }
    }
}

/// Diagonal Lie-algebra coordinate summing to zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CartanVector<T> {
    n: usize,
    c: [T; MAX_N],
}

impl<T: Real> CartanVector<T> {
    pub fn new(coords: &[T]) -> Result<Self, GeometryError> {
        let v = Self::unchecked(coords);
        let sum = coords.iter().fold(T::zero(), |s, x| s + *x);
        let scale = v.norm().max(T::one());
        if !coords.iter().all(|x| x.is_finite()) || sum.abs() > T::tol(1e-12) * scale {
            return Err(GeometryError::Cartan(format!("coordinates sum to {sum}")));
        }
        Ok(v)
    }

    /// Projects onto the zero-sum hyperplane.
    pub fn projected(coords: &[T]) -> Self {
        let mean = coords.iter().fold(T::zero(), |s, x| s + *x) / T::c(coords.len() as f64);
        let shifted: Vec<T> = coords.iter().map(|x| *x - mean).collect();
        Self::unchecked(&shifted)
    }

    pub(crate) fn unchecked(coords: &[T]) -> Self {
        assert!((1..=MAX_N).contains(&coords.len()));
        let mut c = [T::zero(); MAX_N];
        c[..coords.len()].copy_from_slice(coords);
        CartanVector { n: coords.len(), c }
    }

    pub fn zero(n: usize) -> Self {
        CartanVector { n, c: [T::zero(); MAX_N] }
    }

    /// Unit vector along the barycenter of the model chamber.
    pub fn barycentric(n: usize) -> Self {
        let raw: Vec<T> = (0..n).map(|i| T::c(n as f64 - 1.0 - 2.0 * i as f64)).collect();
        Self::unchecked(&raw).normalized()
    }

    pub fn coords(&self) -> &[T] {
        &self.c[..self.n]
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn norm(&self) -> T {
        crate::mat::norm(self.coords())
    }

    pub fn normalized(&self) -> Self {
        self.scale(T::one() / self.norm())
    }

    pub fn scale(&self, s: T) -> Self {
        let mut out = *self;
        for x in out.c[..self.n].iter_mut() {
            *x = *x * s;
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = *self;
        for i in 0..self.n {
            out.c[i] += other.c[i];
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-T::one()))
    }

    pub fn dot(&self, other: &Self) -> T {
        crate::mat::dot(self.coords(), other.coords())
    }

    pub fn is_strictly_decreasing(&self) -> bool {
        self.coords().windows(2).all(|w| w[0] > w[1])
    }

    /// exp(diag(coords)).
    pub fn exp_diag(&self) -> Mat<T> {
        let e: Vec<T> = self.coords().iter().map(|x| x.exp()).collect();
        Mat::diag(&e)
    }
}

/// ‖log σ(m)‖₂, summed in sorted order so the value depends only on the multiset of singular values.
pub fn log_sv_norm<T: Real>(m: &Mat<T>) -> T {
    log_sv_norm_of(&m.singular_values()[..m.n()])
}

pub fn log_sv_norm_of<T: Real>(s: &[T]) -> T {
    let mut logs: Vec<T> = s.iter().map(|x| x.ln()).collect();
    logs.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    logs.iter().fold(T::zero(), |acc, l| acc + *l * *l).sqrt()
}

/// d(p, q) = ½‖log eig(p⁻¹q)‖₂.
pub fn cartan_distance<T: Real>(p: &SpacePoint<T>, q: &SpacePoint<T>) -> Result<T, GeometryError> {
    let lp = p.form.cholesky().ok_or_else(|| GeometryError::Domain("first argument not SPD".into()))?;
    let lq = q.form.cholesky().ok_or_else(|| GeometryError::Domain("second argument not SPD".into()))?;
    let m = lp.inverse().ok_or_else(|| GeometryError::Domain("singular form".into()))? * lq;
    Ok(log_sv_norm(&m.transpose()))
}

/// d([g], [h]) computed from group representatives.
pub fn frame_distance<T: Real>(g: &Mat<T>, h: &Mat<T>) -> T {
    let m = g.inverse().expect("invertible frame") * *h;
    log_sv_norm(&m)
}

/// Point at parameter t on the geodesic from p (t = 0) to q (t = 1); t outside [0,1] extends it.
pub fn geodesic<T: Real>(p: &SpacePoint<T>, q: &SpacePoint<T>, t: T) -> Result<SpacePoint<T>, GeometryError> {
    let l = p.form.cholesky().ok_or_else(|| GeometryError::Domain("first argument not SPD".into()))?;
    q.form.cholesky().ok_or_else(|| GeometryError::Domain("second argument not SPD".into()))?;
    let li = l.inverse().ok_or_else(|| GeometryError::Domain("singular form".into()))?;
    let m = (li * q.form * li.transpose()).symmetrized();
    let mt = m.sym_apply(|lam| lam.powf(t));
    Ok(SpacePoint { form: (l * mt * l.transpose()).symmetrized() })
}

/// g = u·exp(diag(a))·k.
#[derive(Clone, Copy, Debug)]
pub struct Iwasawa<T> {
    pub u: Mat<T>,
    pub a: CartanVector<T>,
    pub k: Mat<T>,
}

/// Iwasawa decomposition with u unit upper-triangular and k orthogonal. For det g ≠ 1 the
/// coordinates of `a` sum to log|det g|.
pub fn iwasawa_na<T: Real>(g: &Mat<T>) -> Iwasawa<T> {
    let n = g.n();
    let (r, k) = g.rq();
    let d: Vec<T> = (0..n).map(|i| r[(i, i)]).collect();
    let inv: Vec<T> = d.iter().map(|x| T::one() / *x).collect();
    let mut u = r.scale_cols(&inv);
    for i in 0..n {
        u[(i, i)] = T::one();
    }
    let logs: Vec<T> = d.iter().map(|x| x.ln()).collect();
    Iwasawa { u, a: CartanVector::unchecked(&logs), k }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn identity_distance_is_zero() {
        let i = SpacePoint::<f64>::identity(3);
        assert_eq!(cartan_distance(&i, &i).unwrap(), 0.0);
    }

    #[test]
    fn diagonal_distance_closed_form() {
        let i = SpacePoint::<f64>::identity(2);
        let q = SpacePoint::new(Mat::diag(&[E * E, 1.0 / (E * E)])).unwrap();
        assert!((cartan_distance(&i, &q).unwrap() - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn distance_agrees_with_discretized_geodesic_length() {
        // Oracle: sum of 1024 segment lengths, each computed from local eigenvalues.
        let i = SpacePoint::<f64>::identity(2);
        let q = SpacePoint::new(Mat::diag(&[E * E, 1.0 / (E * E)])).unwrap();
        let mut total = 0.0;
        let mut prev = i;
        for k in 1..=1024 {
            let next = geodesic(&i, &q, k as f64 / 1024.0).unwrap();
            let ratio = next.form()[(0, 0)] / prev.form()[(0, 0)];
            total += 2f64.sqrt() * 0.5 * ratio.ln().abs();
            prev = next;
        }
        assert!((total - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn translated_pair_keeps_distance() {
        let g = Mat::<f64>::from_rows(&[[1.0, 1.0], [0.0, 1.0]]);
        let p = SpacePoint::identity(2).translate(&g);
        let q = SpacePoint::new(Mat::diag(&[E * E, 1.0 / (E * E)])).unwrap().translate(&g);
        assert!((cartan_distance(&p, &q).unwrap() - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn geodesic_midpoint_of_diagonal() {
        let i = SpacePoint::<f64>::identity(2);
        let q = SpacePoint::new(Mat::diag(&[E * E, 1.0 / (E * E)])).unwrap();
        let m = geodesic(&i, &q, 0.5).unwrap();
        assert!(m.form().dist_max(&Mat::diag(&[E, 1.0 / E])) < 1e-13);
        let back = geodesic(&q, &i, 0.5).unwrap();
        assert!(m.form().dist_max(back.form()) < 1e-13);
        assert!(geodesic(&i, &q, 0.0).unwrap().form().dist_max(i.form()) < 1e-15);
    }

    #[test]
    fn iwasawa_of_triangular_input() {
        let g = Mat::<f64>::from_rows(&[[2.0, 1.0], [0.0, 0.5]]);
        let iw = iwasawa_na(&g);
        assert!(iw.u.dist_max(&Mat::from_rows(&[[1.0, 2.0], [0.0, 1.0]])) < 1e-14);
        assert!((iw.a.coords()[0] - 2f64.ln()).abs() < 1e-14);
        assert!((iw.a.coords()[1] + 2f64.ln()).abs() < 1e-14);
        assert!(iw.k.dist_max(&Mat::identity(2)) < 1e-14);
    }

    #[test]
    fn iwasawa_of_identity() {
        let iw = iwasawa_na(&Mat::<f64>::identity(3));
        assert!(iw.u.dist_max(&Mat::identity(3)) == 0.0);
        assert!(iw.a.norm() == 0.0);
    }

    #[test]
    fn validation_rejects_bad_inputs() {
        assert!(SpacePoint::new(Mat::<f64>::from_rows(&[[1.0, 0.5], [0.0, 1.0]])).is_err());
        assert!(SpacePoint::new(Mat::<f64>::diag(&[2.0, 2.0])).is_err());
        assert!(SpacePoint::new(Mat::<f64>::diag(&[-1.0, -1.0])).is_err());
        assert!(GroupElement::new(Mat::<f64>::diag(&[2.0, 1.0])).is_err());
        assert!(CartanVector::new(&[1.0, 1.0]).is_err());
    }

    #[test]
    fn barycentric_is_unit_and_decreasing() {
        for n in 2..=4 {
            let z = CartanVector::<f64>::barycentric(n);
            assert!((z.norm() - 1.0).abs() < 1e-15);
            assert!(z.is_strictly_decreasing());
        }
    }
}
