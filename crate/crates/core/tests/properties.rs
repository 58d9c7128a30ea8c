//! Invariants of the low-rank algebra, the signature split and the p-value.

use grdpg::lowrank::{frob_distance, pooled_average, two_inf_distance};
use grdpg::spectral::{split_signature, SpectralPair};
use grdpg::testing::bootstrap_pvalue;
use grdpg::LowRankP;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn factor(n: usize) -> impl Strategy<Value = LowRankP> {
    (1usize..=4).prop_flat_map(move |d| {
        (prop::collection::vec(-1.0f64..1.0, n * d), 0..=d)
            .prop_map(move |(v, p)| LowRankP::new(DMatrix::from_vec(n, d, v), p).unwrap())
    })
}

fn triple() -> impl Strategy<Value = (LowRankP, LowRankP, LowRankP)> {
    (2usize..40).prop_flat_map(|n| (factor(n), factor(n), factor(n)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn distance_axioms((a, b, c) in triple()) {
        let ab = frob_distance(&a, &b).unwrap();
        prop_assert_eq!(frob_distance(&a, &a).unwrap(), 0.0);
        prop_assert_eq!(ab, frob_distance(&b, &a).unwrap());
        let slack = 1e-9 * (1.0 + ab);
        prop_assert!(ab <= frob_distance(&a, &c).unwrap() + frob_distance(&c, &b).unwrap() + slack);
        let t = two_inf_distance(&a, &b).unwrap();
        prop_assert_eq!(t, two_inf_distance(&b, &a).unwrap());
        prop_assert!(t <= two_inf_distance(&a, &c).unwrap() + two_inf_distance(&c, &b).unwrap() + slack);
        prop_assert!(t <= ab + slack);
    }

    #[test]
    fn pooled_is_the_midpoint((a, b, _c) in triple()) {
        let m = pooled_average(&a, &b).unwrap();
        let da = frob_distance(&m, &a).unwrap();
        let db = frob_distance(&m, &b).unwrap();
        let ab = frob_distance(&a, &b).unwrap();
        let tol = 1e-8 * (1.0 + ab);
        prop_assert!((da - db).abs() <= tol);
        prop_assert!((da - ab / 2.0).abs() <= tol);
    }

    #[test]
    fn signature_split_keeps_the_multiset(values in prop::collection::vec((0.01f64..10.0, any::<bool>()), 1..8)) {
        let values: Vec<f64> = values.into_iter().map(|(v, neg)| if neg { -v } else { v }).collect();
        let d = values.len();
        let pair = SpectralPair { values: values.clone(), vectors: DMatrix::identity(d + 2, d) };
        let (p, out) = split_signature(&pair, 1e-10).unwrap();
        prop_assert_eq!(p, values.iter().filter(|&&v| v > 0.0).count());
        prop_assert!(out.values[..p].iter().all(|&v| v > 0.0));
        prop_assert!(out.values[p..].iter().all(|&v| v < 0.0));
        let mut a = values.clone();
        let mut b = out.values.clone();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn pvalue_is_a_multiple_of_one_over_b(t0 in -2.0f64..2.0, boots in prop::collection::vec(-2.0f64..2.0, 1..200)) {
        let p = bootstrap_pvalue(t0, &boots).unwrap();
        let b = boots.len() as f64;
        let k = (p * b).round();
        prop_assert_eq!(p, k / b);
        prop_assert_eq!(k as usize, boots.iter().filter(|&&t| t > t0).count());
        prop_assert!((0.0..=1.0).contains(&p));
    }
}
