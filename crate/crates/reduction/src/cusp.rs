//! Cusp excursion d_Γ for Γ = SL_n(Z).
//!
//! For x = [g] the orbit distance min_γ d([e], [γg]) only depends on the lattice spanned by the
//! rows of g, whose Gram matrix is the form g·gᵀ. Everything below works from that form: the
//! basis is the transposed Cholesky factor after sorting the diagonal, so inputs that differ by a
//! coordinate permutation produce bit-identical results.

use flatlab_geometry::{log_sv_norm, GroupElement, Mat, SpacePoint, MAX_N};

use crate::error::ReductionError;
use crate::int::{ext_gcd, gcd, IntMat};
use crate::lattice::{lagrange, lll, Enumerator, Reduced, DEFAULT_BUDGET, LLL_DELTA};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReductionOptions {
    /// Node budget for each short-vector enumeration.
    pub budget: u64,
    /// Maximum number of candidate columns in the exact search for n = 3.
    pub candidate_cap: usize,
}

impl Default for ReductionOptions {
    fn default() -> Self {
        ReductionOptions { budget: DEFAULT_BUDGET, candidate_cap: 3000 }
    }
}

/// Bounds closer than this certify the upper bound as exact.
pub const CERTIFY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CuspExcursion {
    pub value: f64,
    /// γ ∈ SL_n(Z) with value = d([e], [γ·g]).
    pub witness: IntMat,
    pub certified: bool,
    /// Reduction-theoretic lower bound from λ₁ of the lattice and of its dual.
    pub lower_bound: f64,
    /// Value at the LLL (or Lagrange) reduced basis.
    pub upper_bound: f64,
}

/// Canonical basis of the lattice, plus the row permutation used.
struct Canonical {
    basis: Mat<f64>,
    perm: IntMat,
}

/// How a point is handed to the reduction: as its form g·gᵀ or as a frame g.
#[derive(Clone, Copy, Debug)]
pub enum Input<'a> {
    Form(&'a Mat<f64>),
    Frame(&'a Mat<f64>),
}

fn sorted_order(n: usize, key: impl Fn(usize) -> f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| key(i).total_cmp(&key(j)).then(i.cmp(&j)));
    order
}

/// Rows sorted by length, then the upper-triangular basis with the same Gram matrix: the
/// transposed Cholesky factor of the form, or for a frame the R factor of a QR of its rows
/// (which never squares the condition number).
fn canonical(input: Input) -> Result<Canonical, ReductionError> {
    match input {
        Input::Form(form) => {
            let n = form.n();
            let order = sorted_order(n, |i| form[(i, i)]);
            let sorted = Mat::from_fn(n, |i, j| form[(order[i], order[j])]);
            let l = sorted
                .cholesky()
                .ok_or_else(|| ReductionError::Precondition("form is not positive definite".into()))?;
            Ok(Canonical { basis: l.transpose(), perm: IntMat::permutation(&order) })
        }
        Input::Frame(g) => {
            let n = g.n();
            if !g.is_finite() || g.det() == 0.0 {
                return Err(ReductionError::Precondition("frame is singular".into()));
            }
            let norms: Vec<f64> = (0..n).map(|i| g.row(i)[..n].iter().map(|x| x * x).sum()).collect();
            let order = sorted_order(n, |i| norms[i]);
            let sorted_t = Mat::from_fn(n, |i, j| g[(order[j], i)]);
            Ok(Canonical { basis: sorted_t.qr().1, perm: IntMat::permutation(&order) })
        }
    }
}

/// Witness γ for the basis C·t of the canonical lattice, fixed to determinant +1.
fn witness(c: &Canonical, t: &IntMat) -> Result<IntMat, ReductionError> {
    let mut g = t.transpose().mul(&c.perm)?;
    if g.det() < 0 {
        g.negate_row(g.n() - 1);
    }
    Ok(g)
}

fn reduce(basis: &Mat<f64>) -> Result<Reduced, ReductionError> {
    if basis.n() == 2 {
        lagrange(basis)
    } else {
        lll(basis, LLL_DELTA)
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Squared first minimum of an already reduced basis, by enumeration within |b₁|.
fn first_minimum2(basis: &Mat<f64>, budget: u64) -> Result<f64, ReductionError> {
    let n = basis.n();
    let mut best = norm2(&basis.col(0)[..n]);
    let mut visit = |x: &[i64], _: f64| {
        let v = basis.mul_vec(&x.iter().map(|&c| c as f64).collect::<Vec<_>>());
        best = best.min(norm2(&v[..n]));
        best * (1.0 + 1e-10)
    };
    let r2 = norm2(&basis.col(0)[..n]) * (1.0 + 1e-10);
    Enumerator::new(basis, None, r2, budget, &mut visit).run()?;
    Ok(best)
}

/// λ₁², or |b₁|² when the enumeration range does not fit in i64. Either way the lower bound
/// built from it stays valid, since |b₁| ≥ λ₁.
fn first_minimum2_or_bound(basis: &Mat<f64>, budget: u64) -> Result<f64, ReductionError> {
    match first_minimum2(basis, budget) {
        Err(ReductionError::Overflow) => Ok(norm2(&basis.col(0)[..basis.n()])),
        other => other,
    }
}

/// min ‖s‖ over Σs = 0 with s_i ∈ [lo_i, hi_i]; +∞ when infeasible. At most MAX_N bounds.
pub fn water_fill(bounds: &[(f64, f64)]) -> f64 {
    let f = |theta: f64| bounds.iter().map(|&(lo, hi)| theta.max(lo).min(hi)).sum::<f64>();
    let mut buf = [0.0; 2 * MAX_N];
    let mut len = 0;
    for x in bounds.iter().flat_map(|&(lo, hi)| [lo, hi]).filter(|x| x.is_finite()) {
        buf[len] = x;
        len += 1;
    }
    let pts = &mut buf[..len];
    pts.sort_unstable_by(f64::total_cmp);
    let theta = if pts.is_empty() {
        0.0
    } else {
        let first = pts[0];
        let last = *pts.last().unwrap();
        if f(first) >= 0.0 {
            let slope = bounds.iter().filter(|b| b.0 == f64::NEG_INFINITY).count() as f64;
            if f(first) == 0.0 {
                first
            } else if slope == 0.0 {
                return f64::INFINITY;
            } else {
                first - f(first) / slope
            }
        } else if f(last) <= 0.0 {
            let slope = bounds.iter().filter(|b| b.1 == f64::INFINITY).count() as f64;
            if f(last) == 0.0 {
                last
            } else if slope == 0.0 {
                return f64::INFINITY;
            } else {
                last - f(last) / slope
            }
        } else {
            let k = pts.windows(2).position(|w| f(w[0]) < 0.0 && f(w[1]) >= 0.0).expect("sign change");
            let (a, b) = (pts[k], pts[k + 1]);
            let (fa, fb) = (f(a), f(b));
            a + (b - a) * (-fa) / (fb - fa)
        }
    };
    bounds.iter().map(|&(lo, hi)| theta.max(lo).min(hi).powi(2)).sum::<f64>().sqrt()
}

/// Lower bound: the log singular values s₁ ≤ … ≤ s_n of any basis satisfy s₁ ≤ log λ₁ and
/// s_n ≥ −log λ₁(dual).
fn lower_bound(n: usize, log_l1: f64, log_dual_l1: f64) -> f64 {
    let mut b = vec![(f64::NEG_INFINITY, f64::INFINITY); n];
    b[0].1 = log_l1.min(0.0);
    b[n - 1].0 = (-log_dual_l1).max(0.0);
    water_fill(&b)
}

/// Cheap first stage: value at the reduced basis and its witness.
pub fn upper_bound_of(input: Input) -> Result<(f64, IntMat), ReductionError> {
    let c = canonical(input)?;
    let red = reduce(&c.basis)?;
    Ok((log_sv_norm(&red.basis), witness(&c, &red.transform)?))
}

pub fn upper_bound(x: &SpacePoint<f64>) -> Result<(f64, IntMat), ReductionError> {
    upper_bound_of(Input::Form(x.form()))
}

/// d_Γ(g), computed from the rows of g.
pub fn cusp_excursion(g: &GroupElement<f64>, opts: &ReductionOptions) -> Result<CuspExcursion, ReductionError> {
    cusp_excursion_of(Input::Frame(g.matrix()), opts)
}

/// d_Γ of a point, computed from its form.
pub fn cusp_excursion_point(x: &SpacePoint<f64>, opts: &ReductionOptions) -> Result<CuspExcursion, ReductionError> {
    cusp_excursion_of(Input::Form(x.form()), opts)
}

pub fn cusp_excursion_of(input: Input, opts: &ReductionOptions) -> Result<CuspExcursion, ReductionError> {
    let c = canonical(input)?;
    let n = c.basis.n();
    let red = reduce(&c.basis)?;
    let ub = log_sv_norm(&red.basis);
    let (l1, dual_l1) = if n == 2 {
        // Lagrange gives b₁ = λ₁, and a unimodular plane lattice is a rotation of its dual.
        let l1 = norm2(&red.basis.col(0)[..2]).sqrt();
        (l1, l1)
    } else {
        let l1 = first_minimum2_or_bound(&red.basis, opts.budget)?.sqrt();
        let dual = reduce(&red.basis.inverse().expect("unimodular").transpose())?;
        (l1, first_minimum2_or_bound(&dual.basis, opts.budget)?.sqrt())
    };
    let lb = lower_bound(n, l1.ln(), dual_l1.ln());

    let (value, transform, certified) = if n == 2 || ub - lb <= CERTIFY_TOL {
        (ub, red.transform, true)
    } else if n == 3 {
        let search = exact_search3(&red.basis, ub, lb, l1.ln().min(0.0), (-dual_l1.ln()).max(0.0), opts)
            .and_then(|s| Ok((s.value, red.transform.mul(&s.coeffs)?, s.complete)));
        match search {
            Ok(found) => found,
            // Candidate coefficients beyond i64: only the reduced basis is usable.
            Err(ReductionError::Overflow) => (ub, red.transform.clone(), false),
            Err(e) => return Err(e),
        }
    } else {
        (ub, red.transform, false)
    };
    if value > ub + 1e-12 || value < lb - 1e-9 * (1.0 + value) || value < -l1.ln() - 1e-9 * (1.0 + value) {
        // The bounds contradict each other only when rounding has destroyed the lattice geometry.
        return Err(ReductionError::Conditioning { lower: lb, upper: value });
    }
    Ok(CuspExcursion { value, witness: witness(&c, &transform)?, certified, lower_bound: lb, upper_bound: ub })
}

struct Search {
    value: f64,
    coeffs: IntMat,
    complete: bool,
}

fn cross(a: &[i64], b: &[i64]) -> Option<[i64; 3]> {
    let c = |i: usize, j: usize| (a[i] as i128 * b[j] as i128) - (a[j] as i128 * b[i] as i128);
    let m = [c(1, 2), c(2, 0), c(0, 1)];
    let mut out = [0i64; 3];
    for k in 0..3 {
        out[k] = i64::try_from(m[k]).ok()?;
    }
    Some(out)
}

/// x with m·x = 1, for primitive m.
fn bezout3(m: &[i64; 3]) -> Option<[i64; 3]> {
    let (g1, p, q) = ext_gcd(m[0], m[1]);
    let (g, r, s) = ext_gcd(g1, m[2]);
    if g != 1 {
        return None;
    }
    Some([p.checked_mul(r)?, q.checked_mul(r)?, s])
}

/// Exact minimum over bases for n = 3 by branch and bound.
///
/// Every column of an optimal basis has norm ≤ e^{s₃} ≤ e^{best·√(2/3)}. Pairs of candidate columns
/// are pruned with the interlacing bound s₁ ≤ log μ₁ ≤ s₂ ≤ log μ₂ ≤ s₃ (μ the singular values of
/// the pair), and the third column ranges over completions to a basis within the radius.
fn exact_search3(r: &Mat<f64>, ub: f64, lb: f64, s1_max: f64, s3_min: f64, opts: &ReductionOptions) -> Result<Search, ReductionError> {
    let spread = (2.0f64 / 3.0).sqrt();
    let mut best = ub;
    let mut best_x = IntMat::identity(3);
    let radius2 = |v: f64| (2.0 * v * spread).exp() * (1.0 + 1e-9);

    let mut cands: Vec<(f64, [i64; 3], [f64; 3])> = Vec::new();
    let mut overflow = false;
    {
        let cap = opts.candidate_cap;
        let mut visit = |x: &[i64], _: f64| {
            if cands.len() >= cap {
                overflow = true;
                return -1.0;
            }
            let v = r.mul_vec(&[x[0] as f64, x[1] as f64, x[2] as f64]);
            cands.push((norm2(&v[..3]), [x[0], x[1], x[2]], [v[0], v[1], v[2]]));
            radius2(best)
        };
        let mut en = Enumerator::new(r, None, radius2(best), opts.budget, &mut visit);
        match en.run() {
            Ok(()) => {}
            Err(ReductionError::Budget { .. }) => overflow = true,
            Err(e) => return Err(e),
        }
    }
    if overflow {
        return Ok(Search { value: best, coeffs: best_x, complete: false });
    }
    cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut nodes_left = opts.budget;
    // Squared-singular-value thresholds: a pair with μ₂² ≥ hi or μ₁² ≤ lo forces ‖s‖ ≥ best.
    let thresholds = |best: f64| (radius2(best), (2.0 * best * spread).exp(), (-2.0 * best * spread).exp());
    let (mut r2_best, mut hi, mut lo) = thresholds(best);
    for i in 0..cands.len() {
        if cands[i].0 > r2_best {
            break;
        }
        for j in i + 1..cands.len() {
            if cands[j].0 > r2_best {
                break;
            }
            let (xi, xj) = (&cands[i].1, &cands[j].1);
            let Some(m) = cross(xi, xj) else { continue };
            if m == [0, 0, 0] || gcd(gcd(m[0], m[1]), m[2]) != 1 {
                continue;
            }
            let (wi, wj) = (&cands[i].2, &cands[j].2);
            let (a, b, c) = (cands[i].0, wi.iter().zip(wj).map(|(p, q)| p * q).sum::<f64>(), cands[j].0);
            let half_tr = 0.5 * (a + c);
            let disc = (0.25 * (a - c) * (a - c) + b * b).sqrt();
            let e2 = half_tr + disc;
            let e1 = (a * c - b * b) / e2;
            if !(e1 > 0.0) || e2 >= hi || e1 <= lo {
                continue;
            }
            let (lm1, lm2) = (0.5 * e1.ln(), 0.5 * e2.ln());
            let pair_lb = water_fill(&[
                (f64::NEG_INFINITY, lm1.min(s1_max)),
                (lm1, lm2),
                (lm2.max(s3_min), f64::INFINITY),
            ]);
            if pair_lb >= best - 1e-12 {
                continue;
            }
            let Some(x0) = bezout3(&m) else { continue };
            let v0 = r.mul_vec(&[x0[0] as f64, x0[1] as f64, x0[2] as f64]);
            // Orthonormal frame of span(w_i, w_j).
            let r11 = a.sqrt();
            let r12 = b / r11;
            let r22 = (c - r12 * r12).max(0.0).sqrt();
            if !(r22 > 0.0) {
                continue;
            }
            let e1v: Vec<f64> = wi.iter().map(|v| v / r11).collect();
            let e2v: Vec<f64> = (0..3).map(|k| (wj[k] - r12 * e1v[k]) / r22).collect();
            let p1: f64 = (0..3).map(|k| v0[k] * e1v[k]).sum();
            let p2: f64 = (0..3).map(|k| v0[k] * e2v[k]).sum();
            let perp2 = (norm2(&v0[..3]) - p1 * p1 - p2 * p2).max(0.0);
            if perp2 > r2_best {
                continue;
            }
            // Coefficients k with |p + Bp·k| small, Bp = [[r11, r12], [0, r22]].
            let bp = Mat::from_rows(&[[r11, r12], [0.0, r22]]);
            let t2 = -p2 / r22;
            let t1 = (-p1 - r12 * t2) / r11;
            let mut found: Option<(f64, [i64; 3])> = None;
            let mut visit = |k: &[i64], _: f64| {
                let x3 = [
                    x0[0] as i128 + k[0] as i128 * xi[0] as i128 + k[1] as i128 * xj[0] as i128,
                    x0[1] as i128 + k[0] as i128 * xi[1] as i128 + k[1] as i128 * xj[1] as i128,
                    x0[2] as i128 + k[0] as i128 * xi[2] as i128 + k[1] as i128 * xj[2] as i128,
                ];
                let bound = found.map_or(best, |f| f.0);
                if x3.iter().all(|v| v.abs() < (1i128 << 62)) {
                    let x3 = [x3[0] as i64, x3[1] as i64, x3[2] as i64];
                    let v3 = r.mul_vec(&[x3[0] as f64, x3[1] as f64, x3[2] as f64]);
                    let m = Mat::from_fn(3, |row, col| [wi[row], wj[row], v3[row]][col]);
                    let val = log_sv_norm(&m);
                    if val < bound {
                        found = Some((val, x3));
                        return radius2(val) - perp2;
                    }
                }
                radius2(bound) - perp2
            };
            let mut en = Enumerator::new(&bp, Some(&[t1, t2]), r2_best - perp2, nodes_left, &mut visit);
            let status = en.run();
            nodes_left = nodes_left.saturating_sub(en.nodes());
            match status {
                Ok(()) => {}
                Err(ReductionError::Budget { .. }) => return Ok(Search { value: best, coeffs: best_x, complete: false }),
                Err(e) => return Err(e),
            }
            if let Some((val, x3)) = found {
                best = val;
                best_x = IntMat::from_fn(3, |row, col| [xi[row], xj[row], x3[row]][col]);
                (r2_best, hi, lo) = thresholds(best);
                if best <= lb + CERTIFY_TOL {
                    return Ok(Search { value: best, coeffs: best_x, complete: true });
                }
            }
        }
    }
    Ok(Search { value: best, coeffs: best_x, complete: true })
}

#[cfg(test)]
mod tests {
    use super::*;
    use flatlab_geometry::cartan_distance;

    fn run(g: &Mat<f64>) -> CuspExcursion {
        cusp_excursion(&GroupElement::new(*g).unwrap(), &ReductionOptions::default()).unwrap()
    }

    #[test]
    fn identity_is_in_the_orbit() {
        for n in 2..=4 {
            let e = run(&Mat::identity(n));
            assert_eq!(e.value, 0.0);
            assert!(e.certified);
            assert_eq!(e.witness, IntMat::identity(n));
        }
    }

    #[test]
    fn diagonal_cusp_in_dimension_two() {
        let s = 3.0f64;
        let e = run(&Mat::diag(&[s.exp(), (-s).exp()]));
        assert!((e.value - 2f64.sqrt() * s).abs() < 1e-12);
        assert!(e.certified);
    }

    #[test]
    fn witness_realizes_value() {
        let g = Mat::from_rows(&[[2.0, 7.3, 1.1], [0.0, 0.5, -4.0], [0.0, 0.0, 1.0]]);
        let g = GroupElement::normalized(g).unwrap();
        let e = cusp_excursion(&g, &ReductionOptions::default()).unwrap();
        let moved = SpacePoint::from_frame(&(e.witness.to_mat() * *g.matrix()));
        let d = cartan_distance(&SpacePoint::identity(3), &moved).unwrap();
        assert!((d - e.value).abs() < 1e-9);
        assert_eq!(e.witness.det(), 1);
        assert!(e.certified);
    }

    #[test]
    fn water_fill_cases() {
        let inf = f64::INFINITY;
        assert_eq!(water_fill(&[(-inf, inf), (-inf, inf)]), 0.0);
        let v = water_fill(&[(-inf, -1.0), (-inf, inf), (-inf, inf)]);
        // s = (−1, ½, ½).
        assert!((v - 1.5f64.sqrt()).abs() < 1e-14);
        assert_eq!(water_fill(&[(1.0, 2.0), (1.0, 2.0)]), inf);
        assert!((water_fill(&[(-inf, -2.0), (3.0, inf)]) - 18f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn deepest_ray_in_dimension_three() {
        for t in [3.0f64, 5.5, 8.0] {
            let e = run(&Mat::diag(&[t.exp(), 1.0, (-t).exp()]));
            assert!((e.value - 2f64.sqrt() * t).abs() < 1e-9 * t);
            assert!(e.certified);
        }
    }
}
