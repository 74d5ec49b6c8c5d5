use proptest::prelude::*;
use tropsvm::tropical::{dist_to_hyperplane, sector_membership, trop_distance, TropHyperplane, TropPoint};

fn vecs(d: usize, k: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-100.0f64..100.0, d), k)
}

fn arb() -> impl Strategy<Value = (Vec<Vec<f64>>, f64)> {
    (2usize..8).prop_flat_map(|d| (vecs(d, 4), -1e3f64..1e3))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn metric_axioms((vs, c) in arb()) {
        let p = |v: &Vec<f64>| TropPoint::new(v.clone()).unwrap();
        let (u, v, w) = (p(&vs[0]), p(&vs[1]), p(&vs[2]));
        let duv = trop_distance(&u, &v).unwrap();
        prop_assert!(duv >= 0.0);
        prop_assert!((duv - trop_distance(&v, &u).unwrap()).abs() <= 1e-9);
        prop_assert!(trop_distance(&u, &w).unwrap() <= duv + trop_distance(&v, &w).unwrap() + 1e-9);
        prop_assert!((trop_distance(&u.shifted(c), &v).unwrap() - duv).abs() <= 1e-9);
        prop_assert!(trop_distance(&u, &u.shifted(c)).unwrap() <= 1e-9);
    }

    #[test]
    fn hyperplane_distance_is_top_two_gap((vs, c) in arb()) {
        let x = TropPoint::new(vs[0].clone()).unwrap();
        let h = TropHyperplane::new(vs[1].clone()).unwrap();
        let mut y: Vec<f64> = vs[0].iter().zip(&vs[1]).map(|(a, b)| a + b).collect();
        y.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let d = dist_to_hyperplane(&x, &h).unwrap();
        prop_assert!((d - (y[0] - y[1])).abs() <= 1e-9);
        prop_assert!((dist_to_hyperplane(&x.shifted(c), &h).unwrap() - d).abs() <= 1e-9);
        let s = sector_membership(&x, &h, 0.0).unwrap();
        prop_assert_eq!(s.len() > 1, d == 0.0);
    }
}
