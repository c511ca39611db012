use flatlab_geometry::*;
use flatlab_shadows::*;
use proptest::prelude::*;
use rand::Rng;

fn group(n: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-1.5f64..1.5, n * n)
        .prop_map(move |e| Mat::from_fn(n, |i, j| e[i * n + j] + if i == j { 1.0 } else { 0.0 }))
        .prop_filter("well conditioned", |m| m.det().abs() > 0.2 && m.cond() < 50.0)
        .prop_map(|m| {
            let m = if m.det() < 0.0 { m * Mat::diag(&[-1.0, 1.0, 1.0, 1.0][..m.n()]) } else { m };
            *Group::normalized(m).unwrap().matrix()
        })
}

fn point(n: usize) -> impl Strategy<Value = Point> {
    (group(n), prop::collection::vec(-2.0f64..2.0, n))
        .prop_map(|(g, v)| Point::from_frame(&(g * Cartan::projected(&v).exp_diag())))
}

/// Upper-triangular with positive diagonal and determinant 1.
fn na_element(n: usize) -> impl Strategy<Value = Matrix> {
    (prop::collection::vec(-2.0f64..2.0, n * n), prop::collection::vec(-1.5f64..1.5, n)).prop_map(move |(u, a)| {
        let a = Cartan::projected(&a);
        let unip = Mat::from_fn(n, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Less => u[i * n + j],
            std::cmp::Ordering::Equal => 1.0,
            std::cmp::Ordering::Greater => 0.0,
        });
        unip * a.exp_diag()
    })
}

fn nilpotent(n: usize) -> impl Strategy<Value = Unipotent> {
    prop::collection::vec(-3.0f64..3.0, n * (n - 1) / 2).prop_map(move |e| UnipotentCoord::from_entries(n, &e))
}

fn dim() -> impl Strategy<Value = usize> {
    2usize..=4
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn iota_inverts_the_chart(u in dim().prop_flat_map(nilpotent)) {
        let back = iota(&u.chamber()).unwrap();
        prop_assert!(back.nilpotent().dist_max(u.nilpotent()) <= 1e-9 * (1.0 + u.norm()));
    }

    #[test]
    fn chart_recovers_opposite_chambers(f in dim().prop_flat_map(group)) {
        let c = Flag::new(f).unwrap();
        prop_assume!(wall_distance(&Flag::standard(c.n()), &c) > 1e-3);
        let u = iota(&c).unwrap();
        prop_assert!(u.chamber().same_as(&c, 1e-8));
    }

    #[test]
    fn shadows_are_na_equivariant((x, f, g) in dim().prop_flat_map(|n| (point(n), group(n), na_element(n)))) {
        let c = Flag::new(f).unwrap();
        prop_assume!(wall_distance(&Flag::standard(c.n()), &c) > 1e-3);
        let before = shadow_distance(&x, &c).unwrap();
        let after = shadow_distance(&x.translate(&g), &c.translate(&g)).unwrap();
        prop_assert!((before - after).abs() <= 1e-9 * (1.0 + before) * (1.0 + before), "{before} vs {after}");
    }
}

#[test]
fn shadow_bounds_distance_to_the_spanned_flat() {
    let mut rng = SeededStream::new(11, 0).rng();
    let mut checked = 0;
    while checked < 1000 {
        let n = 2 + checked % 3;
        let x = Point::from_frame(&(random_group(n, &mut rng) * random_cartan(n, 2.0, &mut rng).exp_diag()));
        let c = Flag::new(random_group(n, &mut rng)).unwrap();
        let z = Flag::standard(n);
        if wall_distance(&z, &c) < 1e-3 {
            continue;
        }
        let d_shadow = shadow_distance(&x, &c).unwrap();
        let flat = flat_spanned(&c, &z).unwrap();
        let (_, d_flat) = closest_point_on_flat(&x, &flat);
        assert!(d_flat <= d_shadow + 1e-6, "n = {n}: flat distance {d_flat} exceeds shadow distance {d_shadow}");
        checked += 1;
    }
}

fn random_group<R: Rng>(n: usize, rng: &mut R) -> Matrix {
    loop {
        let m: Matrix = Mat::from_fn(n, |i, j| rng.random_range(-1.5..1.5) + if i == j { 1.0 } else { 0.0 });
        if m.det().abs() > 0.2 && m.cond() < 50.0 {
            let m = if m.det() < 0.0 { m * Mat::diag(&[-1.0, 1.0, 1.0, 1.0][..n]) } else { m };
            return *Group::normalized(m).unwrap().matrix();
        }
    }
}

fn random_cartan<R: Rng>(n: usize, r: f64, rng: &mut R) -> Cartan {
    Cartan::projected(&(0..n).map(|_| rng.random_range(-r..r)).collect::<Vec<_>>())
}

#[test]
fn sampled_chambers_stay_in_the_shadow() {
    let mut rng = SeededStream::new(5, 1).rng();
    for k in 0..10_000 {
        let n = 2 + k % 3;
        let x = Point::from_frame(&(random_group(n, &mut rng) * random_cartan(n, 2.0, &mut rng).exp_diag()));
        let rho = rng.random_range(0.1..3.0);
        let density = ChamberDensity::new(rho, DEFAULT_SMOOTHNESS).unwrap();
        let c = sample_chamber(&x, &density, &mut rng);
        let d = shadow_distance(&x, &c).unwrap();
        assert!(d < rho * (1.0 + 1e-9), "shadow distance {d} outside radius {rho}");
    }
}

#[test]
fn sampled_unipotent_mean_vanishes() {
    // Oracle: the bump is symmetric, so each coordinate has mean zero; the bound is 3 standard errors.
    let density = ChamberDensity::new(1.5, DEFAULT_SMOOTHNESS).unwrap();
    let mut rng = SeededStream::new(9, 2).rng();
    let samples: Vec<Vec<f64>> = (0..20_000).map(|_| sample_unipotent(4, &density, &mut rng).entries()).collect();
    for k in 0..6 {
        let m = samples.iter().map(|s| s[k]).sum::<f64>() / samples.len() as f64;
        let var = samples.iter().map(|s| (s[k] - m).powi(2)).sum::<f64>() / (samples.len() - 1) as f64;
        let se = (var / samples.len() as f64).sqrt();
        assert!(m.abs() < 3.0 * se, "coordinate {k}: mean {m}, standard error {se}");
    }
}

#[test]
fn small_radius_concentrates_at_the_reversed_chamber() {
    let mut rng = SeededStream::new(3, 3).rng();
    for n in 2..=4 {
        let g = random_group(n, &mut rng);
        let x = Point::from_frame(&g);
        let density = ChamberDensity::new(1e-9, DEFAULT_SMOOTHNESS).unwrap();
        let c = sample_chamber(&x, &density, &mut rng);
        assert!(c.same_as(&Flag::reversed(n).translate(&x.na_frame()), 1e-7));
    }
}

#[test]
fn group_ball_draws_are_unimodular_and_close() {
    let stream = SeededStream::new(17, 4);
    let mut rng = stream.rng();
    for k in 0..10_000 {
        let n = 2 + k % 3;
        let g = sample_group_ball(n, &mut rng);
        assert!((g.matrix().det() - 1.0).abs() < 1e-9);
        let d = cartan_distance(&Point::identity(n), &g.point()).unwrap();
        assert!(d < 1.0 + 1e-9, "distance {d}");
    }
    let a = sample_group_ball(3, &mut stream.child(1).rng());
    let b = sample_group_ball(3, &mut stream.child(1).rng());
    assert_eq!(a.matrix().to_f64_rows(), b.matrix().to_f64_rows());
}

#[test]
fn shadows_shrink_along_the_barycentric_ray() {
    let mut rng = SeededStream::new(23, 5).rng();
    for n in 2..=4 {
        let x = Point::from_frame(&random_group(n, &mut rng));
        let c = sample_chamber(&x, &ChamberDensity::new(2.0, DEFAULT_SMOOTHNESS).unwrap(), &mut rng);
        let g = x.na_frame();
        let b = Cartan::barycentric(n);
        let ts: Vec<f64> = (0..=40).map(|k| 0.1 * k as f64).collect();
        let logs: Vec<f64> = ts
            .iter()
            .map(|&t| shadow_distance(&Point::from_frame(&(g * b.scale(t).exp_diag())), &c).unwrap().ln())
            .collect();
        assert!(logs.windows(2).all(|w| w[1] < w[0]), "n = {n}: not strictly decreasing");
        let (mt, ml) = (ts.iter().sum::<f64>() / ts.len() as f64, logs.iter().sum::<f64>() / ts.len() as f64);
        let slope = ts.iter().zip(&logs).map(|(t, l)| (t - mt) * (l - ml)).sum::<f64>()
            / ts.iter().map(|t| (t - mt).powi(2)).sum::<f64>();
        assert!(slope < 0.0);
        if n == 2 {
            // log n is scaled by e^{−(b₁ − b₂)t} with b = (1, −1)/√2.
            let kappa = 2.0 * b.coords()[0];
            assert!((-slope / kappa - 1.0).abs() < 0.02, "fitted rate {} vs {kappa}", -slope);
        }
    }
}
