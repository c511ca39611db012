use flatlab_geometry::*;
use flatlab_reduction::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn group(n: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-1.5f64..1.5, n * n)
        .prop_map(move |e| Mat::from_fn(n, |i, j| e[i * n + j] + if i == j { 1.0 } else { 0.0 }))
        .prop_filter("well conditioned", |m| m.det().abs() > 0.2 && m.cond() < 50.0)
        .prop_map(|m| {
            let m = if m.det() < 0.0 { m * Mat::diag(&[-1.0, 1.0, 1.0, 1.0][..m.n()]) } else { m };
            *Group::normalized(m).unwrap().matrix()
        })
}

/// Frame h·exp(diag v), so depth in the cusp is governed by the size of v.
fn frame(n: usize, depth: f64) -> impl Strategy<Value = Matrix> {
    (group(n), prop::collection::vec(-depth..depth, n)).prop_map(|(h, v)| h * Cartan::projected(&v).exp_diag())
}

/// Random integer matrix with entries in [−5, 5] and determinant 1.
fn random_gamma<R: Rng>(n: usize, rng: &mut R) -> IntMat {
    loop {
        let mut m = IntMat::from_fn(n, |_, _| rng.random_range(-5..=5));
        match m.det() {
            1 => return m,
            -1 => {
                m.negate_row(0);
                return m;
            }
            _ => {}
        }
    }
}

fn excursion(m: &Matrix) -> CuspExcursion {
    cusp_excursion(&Group::new(*m).unwrap(), &ReductionOptions::default()).unwrap()
}

/// λ₁ by scanning the coefficient box that must contain a shortest vector.
fn brute_force_l1(b: &Matrix) -> Option<f64> {
    let n = b.n();
    let inv = b.inverse()?;
    let shortest_col = (0..n).map(|j| b.col(j)[..n].iter().map(|x| x * x).sum::<f64>().sqrt()).fold(f64::INFINITY, f64::min);
    let bounds: Vec<i64> =
        (0..n).map(|i| (shortest_col * inv.row(i)[..n].iter().map(|x| x * x).sum::<f64>().sqrt()).floor() as i64).collect();
    if bounds.iter().product::<i64>() > 20_000 {
        return None;
    }
    let mut best = f64::INFINITY;
    let mut x = vec![0i64; n];
    let mut idx: Vec<i64> = bounds.iter().map(|b| -b).collect();
    loop {
        x.copy_from_slice(&idx);
        if x.iter().any(|&c| c != 0) {
            let v = b.mul_vec(&x.iter().map(|&c| c as f64).collect::<Vec<_>>());
            best = best.min(v[..n].iter().map(|c| c * c).sum::<f64>().sqrt());
        }
        let mut k = 0;
        while k < n {
            idx[k] += 1;
            if idx[k] <= bounds[k] {
                break;
            }
            idx[k] = -bounds[k];
            k += 1;
        }
        if k == n {
            return Some(best);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn shortest_vector_matches_box_scan(m in (2usize..=3).prop_flat_map(|n| frame(n, 2.0))) {
        let l = LatticeBasis::normalized(m).unwrap();
        let oracle = brute_force_l1(l.basis());
        prop_assume!(oracle.is_some());
        let sv = shortest_vector(&l, DEFAULT_BUDGET).unwrap();
        prop_assert!((sv.length - oracle.unwrap()).abs() <= 1e-9 * sv.length, "{} vs {:?}", sv.length, oracle);
    }

    #[test]
    fn sandwich_and_witness(m in (2usize..=4).prop_flat_map(|n| frame(n, 5.0))) {
        let n = m.n();
        let e = excursion(&m);
        let l1 = shortest_vector(&LatticeBasis::from_group(&Group::new(m).unwrap()), DEFAULT_BUDGET).unwrap().length;
        prop_assert!(e.value >= 0.0);
        prop_assert!(e.value >= -l1.ln() - 1e-9 * (1.0 + e.value));
        prop_assert!(e.lower_bound <= e.value + 1e-9 * (1.0 + e.value));
        prop_assert!(e.value <= e.upper_bound + 1e-12);
        prop_assert_eq!(e.witness.det(), 1);
        let moved = Point::from_frame(&(e.witness.to_mat() * m));
        let d = cartan_distance(&Point::identity(n), &moved).unwrap();
        prop_assert!((d - e.value).abs() <= 1e-9 * (1.0 + d), "{d} vs {}", e.value);
    }

    #[test]
    fn permuted_coordinates_give_identical_excursions(m in (2usize..=4).prop_flat_map(|n| frame(n, 4.0)), seed in 0u64..1000) {
        let n = m.n();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..n).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let p = IntMat::permutation(&perm).to_mat();
        let p = if p.det() < 0.0 { p * Mat::diag(&[-1.0, 1.0, 1.0, 1.0][..n]) } else { p };
        prop_assert_eq!(excursion(&(p * m)).value, excursion(&m).value);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn certified_excursion_is_gamma_invariant(m in (2usize..=3).prop_flat_map(|n| frame(n, 4.0)), seed in any::<u64>()) {
        let n = m.n();
        let base = excursion(&m);
        prop_assume!(base.certified);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..100 {
            let gamma = random_gamma(n, &mut rng);
            let e = excursion(&(gamma.to_mat() * m));
            if e.certified {
                prop_assert!((e.value - base.value).abs() <= 1e-9 * (1.0 + base.value), "{} vs {}", e.value, base.value);
            } else {
                prop_assert!(e.value >= base.value - 1e-9 * (1.0 + base.value));
            }
        }
    }
}

#[test]
fn deepest_cusp_ray_has_unit_slope() {
    for n in [2usize, 3] {
        let ts: Vec<f64> = (0..=20).map(|k| 3.0 + 0.25 * k as f64).collect();
        let vals: Vec<f64> = ts
            .iter()
            .map(|&t| {
                let mut d = vec![0.0; n];
                d[0] = t;
                d[n - 1] = -t;
                let e = excursion(&Mat::diag(&d.iter().map(|x: &f64| x.exp()).collect::<Vec<_>>()));
                assert!(e.certified);
                e.value
            })
            .collect();
        let (mt, mv) = (ts.iter().sum::<f64>() / 21.0, vals.iter().sum::<f64>() / 21.0);
        let cov: f64 = ts.iter().zip(&vals).map(|(t, v)| (t - mt) * (v - mv)).sum();
        let var: f64 = ts.iter().map(|t| (t - mt) * (t - mt)).sum();
        let unit = 2f64.sqrt();
        assert!((cov / var / unit - 1.0).abs() < 0.02, "n = {n}: slope {}", cov / var);
    }
}

#[test]
fn retraction_moves_by_at_most_the_excursion() {
    let opts = ReductionOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0x7265_7472);
    for k in 0..1000 {
        let n = 2 + k % 3;
        let params = ThickParams::default_for(n);
        let h = loop {
            let m = Mat::from_fn(n, |i, j| rng.random_range(-1.0..1.0) + if i == j { 1.5 } else { 0.0 });
            if m.det() > 0.2 && m.cond() < 50.0 {
                break *Group::normalized(m).unwrap().matrix();
            }
        };
        let depth = rng.random_range(0.0..8.0);
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-depth..=depth)).collect();
        let m = h * Cartan::projected(&v).exp_diag();

        let before = cusp_excursion_of(Input::Frame(&m), &opts).unwrap().value;
        let r = retract_frame(&m, &params, &opts).unwrap();
        assert!(r.moved <= before + 1.0, "moved {} for excursion {before}", r.moved);
        assert!((frame_distance(&m, &r.frame) - r.moved).abs() <= 1e-6 * (1.0 + r.moved));
        let after = cusp_excursion_of(Input::Frame(&r.frame), &opts).unwrap().value;
        assert!(after <= params.r0 + 0.5, "retracted excursion {after} above {}", params.r0 + 0.5);
        if before <= params.r0 {
            assert_eq!(r.frame, m);
        }
        let again = retract_frame(&r.frame, &params, &opts).unwrap();
        assert!(frame_distance(&again.frame, &r.frame) <= 1e-8, "retraction is not idempotent");
    }
}

#[test]
fn thick_boundary_follows_the_closed_convention() {
    let opts = ReductionOptions::default();
    for n in [2usize, 3] {
        let params = ThickParams::new(1.0).unwrap();
        for offset in [-1e-6, -1e-7, 0.0, 1e-7, 1e-6] {
            let s = (params.r0 + offset) / 2f64.sqrt();
            let mut d = vec![1.0; n];
            d[0] = s.exp();
            d[n - 1] = (-s).exp();
            let x = Point::from_frame(&Mat::diag(&d));
            let value = cusp_excursion_point(&x, &opts).unwrap().value;
            assert_eq!(in_thick(&x, &params, &opts).unwrap(), value <= params.r0);
            if offset != 0.0 {
                assert_eq!(in_thick(&x, &params, &opts).unwrap(), offset < 0.0);
            }
        }
    }
}
