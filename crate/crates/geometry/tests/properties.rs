use flatlab_geometry::*;
use proptest::prelude::*;

fn group(n: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-1.5f64..1.5, n * n)
        .prop_map(move |e| {
            let m = Mat::from_fn(n, |i, j| e[i * n + j] + if i == j { 1.0 } else { 0.0 });
            m
        })
        .prop_filter("well conditioned", |m| m.det().abs() > 0.2 && m.cond() < 50.0)
        .prop_map(|m| {
            let m = if m.det() < 0.0 { m * Mat::diag(&[-1.0, 1.0, 1.0, 1.0][..m.n()]) } else { m };
            *Group::normalized(m).unwrap().matrix()
        })
}

fn cartan(n: usize, r: f64) -> impl Strategy<Value = Cartan> {
    prop::collection::vec(-r..r, n).prop_map(|v| Cartan::projected(&v))
}

fn point(n: usize) -> impl Strategy<Value = Point> {
    (group(n), cartan(n, 2.0)).prop_map(|(g, v)| Point::from_frame(&(g * v.exp_diag())))
}

fn dim() -> impl Strategy<Value = usize> {
    2usize..=4
}

fn d(p: &Point, q: &Point) -> f64 {
    cartan_distance(p, q).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn metric_axioms((p, q, r) in dim().prop_flat_map(|n| (point(n), point(n), point(n)))) {
        let (pq, qp) = (d(&p, &q), d(&q, &p));
        prop_assert!((pq - qp).abs() <= 1e-9 * (1.0 + pq));
        prop_assert!(d(&p, &p) < 1e-7);
        prop_assert!(d(&p, &r) <= pq + d(&q, &r) + 1e-9);
    }

    #[test]
    fn isometric_action((p, q, g) in dim().prop_flat_map(|n| (point(n), point(n), group(n)))) {
        let before = d(&p, &q);
        let after = d(&p.translate(&g), &q.translate(&g));
        prop_assert!((before - after).abs() <= 1e-8 * (1.0 + before));
    }

    #[test]
    fn flats_are_euclidean((g, v, w) in dim().prop_flat_map(|n| (group(n), cartan(n, 2.0), cartan(n, 2.0)))) {
        let flat = Flat::new(Group::new(g).unwrap());
        let dist = d(&flat.point(&v), &flat.point(&w));
        prop_assert!((dist - v.sub(&w).norm()).abs() <= 1e-8 * (1.0 + dist));
    }

    #[test]
    fn weyl_symmetry(v in dim().prop_flat_map(|n| cartan(n, 3.0)), seed in 0usize..24) {
        // Permuting flat coordinates is an isometry fixing the base point exactly.
        let n = v.n();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut s = seed;
        for i in (1..n).rev() {
            perm.swap(i, s % (i + 1));
            s /= i + 1;
        }
        let w = Cartan::new(&perm.iter().map(|&i| v.coords()[i]).collect::<Vec<_>>()).unwrap();
        let o = Point::identity(n);
        let a = d(&o, &Point::from_frame(&v.exp_diag()));
        let b = d(&o, &Point::from_frame(&w.exp_diag()));
        prop_assert_eq!(a, b);
    }

    #[test]
    fn geodesic_midpoint((p, q) in dim().prop_flat_map(|n| (point(n), point(n)))) {
        let total = d(&p, &q);
        let m = geodesic(&p, &q, 0.5).unwrap();
        prop_assert!((d(&p, &m) - total / 2.0).abs() <= 1e-7 * (1.0 + total));
        prop_assert!((d(&m, &q) - total / 2.0).abs() <= 1e-7 * (1.0 + total));
    }

    #[test]
    fn spanned_flat_has_its_chambers((g, h) in dim().prop_flat_map(|n| (group(n), group(n)))) {
        let n = g.n();
        let b = Chamber::new(g).unwrap();
        let c = Chamber::new(h * Mat::reversal(n)).unwrap();
        prop_assume!(opposite(&b, &c));
        if let Ok(flat) = flat_spanned(&b, &c) {
            prop_assert!(flat.chamber().same_as(&b, 1e-6));
            prop_assert!(flat.opposite_chamber().same_as(&c, 1e-6));
            prop_assert!((flat.matrix().det() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn rays_have_unit_speed((x, v, t, g) in dim().prop_flat_map(|n| (point(n), cartan(n, 1.0), 0.0f64..5.0, group(n)))) {
        let n = x.n();
        let mut c: Vec<f64> = v.coords().to_vec();
        c.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for (i, ci) in c.iter_mut().enumerate() {
            *ci += 0.2 * (n - i) as f64;
        }
        let dir = Cartan::projected(&c).normalized();
        prop_assume!(dir.is_strictly_decreasing());
        let bd = Direction::new(Chamber::new(g).unwrap(), dir).unwrap();
        let y = exp_map(&x, &bd, t).unwrap();
        prop_assert!((d(&x, &y) - t).abs() <= 1e-7 * (1.0 + t));
    }

    #[test]
    fn closest_point_beats_flat_samples((x, g, v) in dim().prop_flat_map(|n| (point(n), group(n), cartan(n, 2.0)))) {
        let flat = Flat::new(Group::new(g).unwrap());
        let (w, dist) = closest_point_on_flat(&x, &flat);
        prop_assert!((d(&x, &flat.point(&w)) - dist).abs() <= 1e-8 * (1.0 + dist));
        prop_assert!(dist <= d(&x, &flat.point(&v)) + 1e-9);
    }

    #[test]
    fn single_precision_agrees((p, q) in dim().prop_flat_map(|n| (point(n), point(n)))) {
        let d64 = d(&p, &q);
        let p32 = SpacePoint::<f32>::new(p.form().cast()).unwrap();
        let q32 = SpacePoint::<f32>::new(q.form().cast()).unwrap();
        let d32 = cartan_distance(&p32, &q32).unwrap() as f64;
        prop_assert!((d64 - d32).abs() <= 1e-2 * (1.0 + d64));
    }
}

fn direction(n: usize) -> impl Strategy<Value = Direction> {
    (group(n), prop::collection::vec(0.05f64..1.0, n - 1)).prop_map(move |(g, gaps)| {
        // Strictly decreasing coordinates built from positive gaps.
        let mut c = vec![0.0; n];
        for i in 1..n {
            c[i] = c[i - 1] - gaps[i - 1];
        }
        Direction::new(Chamber::new(g).unwrap(), Cartan::projected(&c).normalized()).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn exp_map_coarse_lipschitz((x, y, v, w, s, t) in dim().prop_flat_map(|n| {
        (point(n), point(n), direction(n), direction(n), 0.0f64..6.0, 0.0f64..6.0)
    })) {
        let lhs = d(&exp_map(&x, &v, s).unwrap(), &exp_map(&y, &w, t).unwrap());
        let rhs = d(&x, &y) + cone_distance(s, t, tits_angle(&v, &w));
        prop_assert!(lhs <= rhs + 1e-6, "{lhs} > {rhs}");
    }

    #[test]
    fn rays_to_a_common_point_do_not_diverge((x, y, v, t) in dim().prop_flat_map(|n| {
        (point(n), point(n), direction(n), 0.0f64..8.0)
    })) {
        let lhs = d(&exp_map(&x, &v, t).unwrap(), &exp_map(&y, &v, t).unwrap());
        prop_assert!(lhs <= d(&x, &y) + 1e-8);
    }

    #[test]
    fn iwasawa_round_trip(g in dim().prop_flat_map(group)) {
        let iw = iwasawa_na(&g);
        let back = iw.u * iw.a.exp_diag() * iw.k;
        prop_assert!(back.dist_max(&g) < 1e-10);
        for i in 0..g.n() {
            prop_assert_eq!(iw.u[(i, i)], 1.0);
            for j in 0..i {
                prop_assert_eq!(iw.u[(i, j)], 0.0);
            }
        }
        prop_assert!((iw.k * iw.k.transpose()).dist_max(&Mat::identity(g.n())) < 1e-12);
    }

    #[test]
    fn flat_through_agrees_with_flat_spanned((g, h, v) in dim().prop_flat_map(|n| (group(n), group(n), cartan(n, 2.0)))) {
        let n = g.n();
        let b = Chamber::new(g).unwrap();
        let c = Chamber::new(h * Mat::reversal(n)).unwrap();
        prop_assume!(opposite(&b, &c));
        let spanned = flat_spanned(&b, &c).unwrap();
        prop_assume!(spanned.matrix().cond() < 100.0);
        let x = spanned.point(&v);
        let through = flat_through(&x, &b).unwrap();
        prop_assert!(closest_point_on_flat(&x, &through).1 < 1e-8);
        // Sampled grid of one flat lies on the other.
        for k in 0..5 {
            let offset: Vec<f64> = (0..n).map(|i| ((i * 7 + k * 3) % 5) as f64 - 2.0).collect();
            let p = through.point(&Cartan::projected(&offset));
            prop_assert!(closest_point_on_flat(&p, &spanned).1 < 1e-6);
        }
    }
}
