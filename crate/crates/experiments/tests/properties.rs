use flatlab_experiments::dyadic::DyadicComplex;
use flatlab_experiments::lmr::GeodesicPair;
use flatlab_experiments::{HpFrame, ReducedPoint};
use flatlab_geometry::{CartanVector, GroupElement, Mat};
use proptest::prelude::*;

fn group3() -> impl Strategy<Value = Mat<f64>> {
    prop::collection::vec(-0.8f64..0.8, 9)
        .prop_map(|e| Mat::from_fn(3, |i, j| e[i * 3 + j] + if i == j { 1.5 } else { 0.0 }))
        .prop_filter("well conditioned", |m| m.det() > 0.2 && m.cond() < 30.0)
        .prop_map(|m| *GroupElement::normalized(m).unwrap().matrix())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn enumeration_matches_the_closed_form_count(level in 1u32..=7, n in 2usize..=3) {
        let c = DyadicComplex::new(level, n).unwrap();
        prop_assert_eq!(c.cells().count() as u128, c.cell_count());
    }

    #[test]
    fn geodesic_pairs_are_normalized(h in group3(), v in prop::array::uniform3(-10.0f64..10.0)) {
        let p = GeodesicPair::new(h, v);
        prop_assert!((p.hx.det() - 1.0).abs() < 1e-9);
        prop_assert!((p.w.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.w[0] > p.w[1] && p.w[1] > p.w[2]);
        let norm = CartanVector::projected(&v).norm();
        prop_assert!((p.d - norm).abs() <= 1e-5 + 1e-12 * norm);
    }

    #[test]
    fn reduced_distance_is_symmetric_and_matches_the_flat(h in group3(), a in prop::array::uniform3(-15.0f64..15.0), b in prop::array::uniform3(-15.0f64..15.0)) {
        let (a, b) = (CartanVector::projected(&a), CartanVector::projected(&b));
        let pa = ReducedPoint::reduce(&HpFrame::flat_point(&h, a.coords()), None).unwrap();
        let pb = ReducedPoint::reduce(&HpFrame::flat_point(&h, b.coords()), None).unwrap();
        let exact = CartanVector::projected(&[a.coords()[0] - b.coords()[0], a.coords()[1] - b.coords()[1], a.coords()[2] - b.coords()[2]]).norm();
        let (ab, ba) = (pa.distance(&pb), pb.distance(&pa));
        prop_assert!((ab - exact).abs() <= 1e-7 * (1.0 + exact), "{} vs {}", ab, exact);
        prop_assert!((ab - ba).abs() <= 1e-7 * (1.0 + exact));
    }
}
