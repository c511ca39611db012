use crate::error::GeometryError;
use crate::mat::{Mat, MAX_N};
use crate::scalar::Real;
use crate::space::{iwasawa_na, CartanVector, GroupElement, SpacePoint};

/// Complete flag: the i-th subspace is spanned by the first i columns of `frame`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Flag<T> {
    frame: Mat<T>,
}

impl<T: Real> Flag<T> {
    pub fn new(frame: Mat<T>) -> Result<Self, GeometryError> {
        let det = frame.det();
        if !frame.is_finite() || det == T::zero() || !det.is_finite() {
            return Err(GeometryError::Flag("frame is singular".into()));
        }
        Ok(Flag { frame })
    }

    /// The model chamber z (standard basis order).
    pub fn standard(n: usize) -> Self {
        Flag { frame: Mat::identity(n) }
    }

    /// The opposite model chamber z* (reversed basis order).
    pub fn reversed(n: usize) -> Self {
        Flag { frame: Mat::reversal(n) }
    }

    pub fn frame(&self) -> &Mat<T> {
        &self.frame
    }

    pub fn n(&self) -> usize {
        self.frame.n()
    }

    pub fn cond(&self) -> T {
        self.frame.cond()
    }

    /// Orthonormal representative: Q from frame = Q R with positive diagonal in R.
    pub fn canonical(&self) -> Mat<T> {
        self.frame.qr().0
    }

    /// g·flag.
    pub fn translate(&self, g: &Mat<T>) -> Self {
        Flag { frame: *g * self.frame }
    }

    /// Equality of flags: the canonical frames agree up to column signs.
    pub fn same_as(&self, other: &Self, tol: T) -> bool {
        let m = self.canonical().transpose() * other.canonical();
        let n = self.n();
        (0..n).all(|i| (0..n).all(|j| if i == j { (m[(i, i)].abs() - T::one()).abs() <= tol } else { m[(i, j)].abs() <= tol }))
    }
}

/// Point of a chamber at infinity: the chamber plus a unit, strictly decreasing Cartan direction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryDirection<T> {
    pub chamber: Flag<T>,
    pub model_coord: CartanVector<T>,
}

impl<T: Real> BoundaryDirection<T> {
    pub fn new(chamber: Flag<T>, model_coord: CartanVector<T>) -> Result<Self, GeometryError> {
        if (model_coord.norm() - T::one()).abs() > T::tol(1e-9) {
            return Err(GeometryError::Direction("model coordinate is not a unit vector".into()));
        }
        if !model_coord.is_strictly_decreasing() {
            return Err(GeometryError::Direction("model coordinate is not strictly decreasing".into()));
        }
        if model_coord.n() != chamber.n() {
            return Err(GeometryError::Direction("dimension mismatch".into()));
        }
        Ok(BoundaryDirection { chamber, model_coord })
    }
}

/// The maximal flat {[h·exp(diag v))]}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlatFrame<T> {
    frame: GroupElement<T>,
}

impl<T: Real> FlatFrame<T> {
    pub fn new(frame: GroupElement<T>) -> Self {
        FlatFrame { frame }
    }

    pub fn model(n: usize) -> Self {
        FlatFrame { frame: GroupElement::identity(n) }
    }

    pub fn frame(&self) -> &GroupElement<T> {
        &self.frame
    }

    pub fn matrix(&self) -> &Mat<T> {
        self.frame.matrix()
    }

    pub fn n(&self) -> usize {
        self.frame.n()
    }

    /// h·exp(diag v).
    pub fn frame_at(&self, v: &CartanVector<T>) -> Mat<T> {
        let e: Vec<T> = v.coords().iter().map(|x| x.exp()).collect();
        self.matrix().scale_cols(&e)
    }

    pub fn point(&self, v: &CartanVector<T>) -> SpacePoint<T> {
        SpacePoint::from_frame(&self.frame_at(v))
    }

    /// Chamber the flat approaches along strictly decreasing directions.
    pub fn chamber(&self) -> Flag<T> {
        Flag { frame: *self.matrix() }
    }

    /// Chamber the flat approaches along strictly increasing directions.
    pub fn opposite_chamber(&self) -> Flag<T> {
        Flag { frame: *self.matrix() * Mat::reversal(self.n()) }
    }
}

fn block_det<T: Real>(b: &Mat<T>, nb: usize, c: &Mat<T>, nc: usize) -> T {
    let n = b.n();
    let m = Mat::from_fn(n, |r, j| if j < nb { b[(r, j)] } else { c[(r, j - nb)] });
    debug_assert_eq!(nb + nc, n);
    m.det()
}

/// First index i at which the i-th subspace of b meets the (n−i)-th subspace of c.
pub fn opposition_failure<T: Real>(b: &Flag<T>, c: &Flag<T>) -> Option<usize> {
    let n = b.n();
    let (qb, qc) = (b.canonical(), c.canonical());
    (1..n).find(|&i| block_det(&qb, i, &qc, n - i).abs() <= T::c(1e-10))
}

pub fn opposite<T: Real>(b: &Flag<T>, c: &Flag<T>) -> bool {
    opposition_failure(b, c).is_none()
}

/// Null vector of a k×(k+1) matrix given by its rows, via signed maximal minors.
fn null_vector<T: Real>(rows: &[[T; MAX_N]], k: usize) -> [T; MAX_N] {
    let mut out = [T::zero(); MAX_N];
    if k == 0 {
        out[0] = T::one();
        return out;
    }
    for j in 0..=k {
        let minor = Mat::from_fn(k, |r, c| rows[r][if c < j { c } else { c + 1 }]);
        let sign = if j % 2 == 0 { T::one() } else { -T::one() };
        out[j] = sign * minor.det();
    }
    out
}

/// Frame of the flat with b at +∞ of decreasing directions and c at +∞ of increasing ones.
pub fn flat_spanned<T: Real>(b: &Flag<T>, c: &Flag<T>) -> Result<FlatFrame<T>, GeometryError> {
    if let Some(index) = opposition_failure(b, c) {
        return Err(GeometryError::NotOpposite { index });
    }
    let n = b.n();
    let (qb, qc) = (b.canonical(), c.canonical());
    let mut h = Mat::zeros(n);
    for i in 1..=n {
        // L_i = b_i ∩ c_{n-i+1}; the complement of c_{n-i+1} is spanned by the last i-1 columns of qc.
        let k = i - 1;
        let mut rows = [[T::zero(); MAX_N]; MAX_N];
        for r in 0..k {
            let w = qc.col(n - 1 - r);
            for j in 0..i {
                rows[r][j] = (0..n).fold(T::zero(), |s, m| s + w[m] * qb[(m, j)]);
            }
        }
        let alpha = null_vector(&rows, k);
        let mut v = [T::zero(); MAX_N];
        for j in 0..i {
            for m in 0..n {
                v[m] += alpha[j] * qb[(m, j)];
            }
        }
        let len = crate::mat::norm(&v[..n]);
        let pivot = v[i - 1];
        let s = if pivot.abs() > T::c(1e-8) * len { pivot } else { len };
        for m in 0..n {
            v[m] /= s;
        }
        h.set_col(i - 1, &v);
    }
    let det = h.det();
    if det < T::zero() {
        let last = h.col(n - 1);
        let neg: Vec<T> = last[..n].iter().map(|x| -*x).collect();
        h.set_col(n - 1, &neg);
    }
    let scale = det.abs().powf(-T::one() / T::c(n as f64));
    Ok(FlatFrame::new(GroupElement::new(h.scale(scale))?))
}

/// The flat through x asymptotic to `chamber`, together with the Cartan coordinate of x on it.
pub fn flat_through_with_coord<T: Real>(
    x: &SpacePoint<T>,
    chamber: &Flag<T>,
) -> Result<(FlatFrame<T>, CartanVector<T>), GeometryError> {
    let cond = chamber.cond();
    if !(cond <= T::c(1e8)) {
        return Err(GeometryError::Conditioning { cond: cond.f64() });
    }
    let n = x.n();
    let f = *chamber.frame();
    let g = x.frame();
    let iw = iwasawa_na(&(f.inverse().expect("checked conditioning") * g));
    let mut h = f * iw.u;
    let det = h.det();
    if det < T::zero() {
        let last = h.col(n - 1);
        let neg: Vec<T> = last[..n].iter().map(|v| -*v).collect();
        h.set_col(n - 1, &neg);
    }
    let shift = det.abs().ln() / T::c(n as f64);
    let h = h.scale((-shift).exp());
    let coords: Vec<T> = iw.a.coords().iter().map(|a| *a + shift).collect();
    let frame = FlatFrame::new(GroupElement::new(h)?);
    Ok((frame, CartanVector::projected(&coords)))
}

pub fn flat_through<T: Real>(x: &SpacePoint<T>, chamber: &Flag<T>) -> Result<FlatFrame<T>, GeometryError> {
    flat_through_with_coord(x, chamber).map(|(f, _)| f)
}

/// The unit-speed ray from x toward `dir`, evaluated at time t.
pub fn exp_map<T: Real>(x: &SpacePoint<T>, dir: &BoundaryDirection<T>, t: T) -> Result<SpacePoint<T>, GeometryError> {
    let (flat, v0) = flat_through_with_coord(x, &dir.chamber)?;
    Ok(flat.point(&v0.add(&dir.model_coord.scale(t))))
}

/// Permutation matrix w with F₁⁻¹F₂ ∈ B·w·B (B upper-triangular), read off the ranks of
/// bottom-left submatrices.
pub fn relative_position<T: Real>(f1: &Flag<T>, f2: &Flag<T>) -> Mat<T> {
    let n = f1.n();
    let m = f1.canonical().transpose() * f2.canonical();
    let rank = |i: usize, j: usize| -> usize {
        if i >= n || j == 0 {
            return 0;
        }
        let rows = n - i;
        let size = rows.max(j);
        let sub = Mat::from_fn(size, |r, c| if r < rows && c < j { m[(i + r, c)] } else { T::zero() });
        sub.singular_values()[..size].iter().filter(|s| **s > T::c(1e-9)).count()
    };
    Mat::from_fn(n, |i, j| {
        let d = rank(i, j + 1) + rank(i + 1, j) - rank(i + 1, j + 1) - rank(i, j);
        if d == 1 { T::one() } else { T::zero() }
    })
}

/// Tits angle between two boundary points.
pub fn tits_angle<T: Real>(d1: &BoundaryDirection<T>, d2: &BoundaryDirection<T>) -> T {
    let w = relative_position(&d1.chamber, &d2.chamber);
    let moved = w.mul_vec(d2.model_coord.coords());
    let c = crate::mat::dot(d1.model_coord.coords(), &moved[..d1.chamber.n()]);
    c.max(-T::one()).min(T::one()).acos()
}

/// Euclidean cone metric on (direction, radius) pairs.
pub fn cone_distance<T: Real>(t1: T, t2: T, angle: T) -> T {
    let two = T::c(2.0);
    (t1 * t1 + t2 * t2 - two * t1 * t2 * angle.cos()).max(T::zero()).sqrt()
}

fn helmert<T: Real>(n: usize) -> Vec<[T; MAX_N]> {
    (1..n)
        .map(|k| {
            let mut e = [T::zero(); MAX_N];
            let norm = T::c(((k * (k + 1)) as f64).sqrt());
            for item in e.iter_mut().take(k) {
                *item = T::one() / norm;
            }
            e[k] = -T::c(k as f64) / norm;
            e
        })
        .collect()
}

/// Minimizes w ↦ ‖log σ(a·exp(diag w))‖ over zero-sum w by Levenberg–Marquardt.
/// The objective is convex along the flat, so the damped iteration reaches the global minimum.
/// Returns the minimizer and the minimal value.
pub fn minimize_over_flat<T: Real>(a: &Mat<T>, start: &CartanVector<T>) -> (CartanVector<T>, T) {
    let n = a.n();
    let m = n - 1;
    let basis = helmert::<T>(n);
    let eval = |w: &CartanVector<T>| {
        let e: Vec<T> = w.coords().iter().map(|x| x.exp()).collect();
        let svd = a.scale_cols(&e).svd();
        let r: Vec<T> = svd.s[..n].iter().map(|s| s.ln()).collect();
        let f = r.iter().fold(T::zero(), |s, x| s + *x * *x);
        (f, r, svd.v)
    };
    let mut w = *start;
    let (mut f, mut r, mut v) = eval(&w);
    let mut lambda = T::c(1e-3);
    for _ in 0..2000 {
        // d log σ_k / d w_j = v_jk², restricted to the zero-sum basis.
        let mut je = [[T::zero(); MAX_N]; MAX_N];
        for (k, row) in je.iter_mut().enumerate().take(n) {
            for (q, e) in basis.iter().enumerate() {
                row[q] = (0..n).fold(T::zero(), |s, j| s + v[(j, k)] * v[(j, k)] * e[j]);
            }
        }
        let mut g = [T::zero(); MAX_N];
        for q in 0..m {
            g[q] = (0..n).fold(T::zero(), |s, k| s + je[k][q] * r[k]);
        }
        let gnorm = crate::mat::norm(&g[..m]);
        if gnorm <= T::epsilon() * T::c(64.0) * (T::one() + f.sqrt()) {
            break;
        }
        let jtj = Mat::from_fn(m, |p, q| (0..n).fold(T::zero(), |s, k| s + je[k][p] * je[k][q]));
        let rhs: Vec<T> = g[..m].iter().map(|x| -*x).collect();
        let mut accepted = false;
        while lambda < T::c(1e12) {
            let h = Mat::from_fn(m, |p, q| if p == q { jtj[(p, q)] + lambda } else { jtj[(p, q)] });
            let y = match h.inverse() {
                Some(hi) => hi.mul_vec(&rhs),
                None => {
                    lambda *= T::c(10.0);
                    continue;
                }
            };
            let mut trial = [T::zero(); MAX_N];
            for j in 0..n {
                trial[j] = w.coords()[j] + basis.iter().enumerate().fold(T::zero(), |s, (q, e)| s + y[q] * e[j]);
            }
            let tw = CartanVector::projected(&trial[..n]);
            let (tf, tr, tv) = eval(&tw);
            if tf < f {
                w = tw;
                f = tf;
                r = tr;
                v = tv;
                lambda = (lambda / T::c(3.0)).max(T::c(1e-12));
                accepted = true;
                break;
            }
            lambda *= T::c(10.0);
        }
        if !accepted {
            break;
        }
    }
    (w, f.sqrt())
}

/// Closest point of a flat to x, as its Cartan coordinate and the distance.
pub fn closest_point_on_flat<T: Real>(x: &SpacePoint<T>, flat: &FlatFrame<T>) -> (CartanVector<T>, T) {
    let g = x.frame();
    let h = *flat.matrix();
    let start = iwasawa_na(&(h.inverse().expect("flat frame invertible") * g)).a;
    let a = g.inverse().expect("frame invertible") * h;
    minimize_over_flat(&a, &CartanVector::projected(start.coords()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::cartan_distance;

    #[test]
    fn model_chambers_are_opposite() {
        assert!(opposite(&Flag::<f64>::standard(3), &Flag::reversed(3)));
        assert!(!opposite(&Flag::<f64>::standard(3), &Flag::standard(3)));
    }

    #[test]
    fn hand_checked_opposition_in_dimension_two() {
        let c = Flag::new(Mat::<f64>::from_rows(&[[1.0, 1.0], [1.0, 0.0]])).unwrap();
        assert!(opposite(&Flag::standard(2), &c));
    }

    #[test]
    fn model_flat_is_identity() {
        let h = flat_spanned(&Flag::<f64>::standard(3), &Flag::reversed(3)).unwrap();
        assert!(h.matrix().dist_max(&Mat::identity(3)) < 1e-15);
    }

    #[test]
    fn spanned_flat_by_hand() {
        let c = Flag::new(Mat::<f64>::from_rows(&[[1.0, 0.0], [1.0, 1.0]])).unwrap();
        let h = flat_spanned(&Flag::standard(2), &c).unwrap();
        assert!(h.matrix().dist_max(&Mat::from_rows(&[[1.0, 1.0], [0.0, 1.0]])) < 1e-14);
    }

    #[test]
    fn degenerate_pair_reports_index() {
        let e = flat_spanned(&Flag::<f64>::standard(3), &Flag::standard(3)).unwrap_err();
        assert_eq!(e, GeometryError::NotOpposite { index: 1 });
    }

    #[test]
    fn flat_through_triangular_point() {
        let u = Mat::<f64>::from_rows(&[[1.0, 3.0], [0.0, 1.0]]);
        let x = SpacePoint::from_frame(&u);
        let (f, v) = flat_through_with_coord(&x, &Flag::standard(2)).unwrap();
        assert!(f.matrix().dist_max(&u) < 1e-12);
        assert!(v.norm() < 1e-12);
        let identity = flat_through(&SpacePoint::<f64>::identity(3), &Flag::standard(3)).unwrap();
        assert!(identity.matrix().dist_max(&Mat::identity(3)) < 1e-14);
    }

    #[test]
    fn barycentric_ray_from_origin() {
        let z = CartanVector::<f64>::barycentric(3);
        let dir = BoundaryDirection::new(Flag::standard(3), z).unwrap();
        let x = SpacePoint::identity(3);
        let t = 2.5;
        let p = exp_map(&x, &dir, t).unwrap();
        let expected = SpacePoint::from_frame(&z.scale(t).exp_diag());
        assert!(p.form().dist_max(expected.form()) < 1e-12);
        assert!((cartan_distance(&x, &p).unwrap() - t).abs() < 1e-12);
        assert!(exp_map(&x, &dir, 0.0).unwrap().form().dist_max(x.form()) < 1e-14);
    }

    #[test]
    fn relative_position_of_model_chambers() {
        let z = Flag::<f64>::standard(3);
        assert!(relative_position(&z, &z).dist_max(&Mat::identity(3)) == 0.0);
        assert!(relative_position(&z, &Flag::reversed(3)).dist_max(&Mat::reversal(3)) == 0.0);
        let dir = BoundaryDirection::new(z, CartanVector::barycentric(3)).unwrap();
        let anti = BoundaryDirection::new(Flag::reversed(3), CartanVector::barycentric(3)).unwrap();
        assert!(tits_angle(&dir, &dir).abs() < 1e-7);
        assert!((tits_angle(&dir, &anti) - std::f64::consts::PI).abs() < 1e-7);
    }

    #[test]
    fn closest_point_recovers_flat_points() {
        let h = Mat::<f64>::from_rows(&[[1.0, 0.4, -0.2], [0.1, 1.0, 0.3], [0.0, -0.5, 1.0]]);
        let flat = FlatFrame::new(GroupElement::normalized(h).unwrap());
        let v = CartanVector::new(&[0.7, -0.2, -0.5]).unwrap();
        let (w, d) = closest_point_on_flat(&flat.point(&v), &flat);
        assert!(d < 1e-9, "{d}");
        assert!(w.sub(&v).norm() < 1e-8);
    }
}
