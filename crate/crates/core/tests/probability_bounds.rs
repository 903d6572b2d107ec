use dispgrid::bounds::{
    disp_upper_from_n, lower_bound_ahr, n_abstract, n_intermediate, n_required, n_theorem1,
};
use dispgrid::partition::feasible_classes;
use dispgrid::probability::{
    class_miss_bound, exact_failure_probability, hit_lower_bound, hit_probability, rational_to_f64,
    union_failure_bound, DEFAULT_OUTCOME_LIMIT,
};
use dispgrid::{core_box, k_from_epsilon, GridParams, DEFAULT_ENUM_LIMIT};
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

fn g(k: u32) -> GridParams {
    GridParams::new(k).unwrap()
}

#[test]
fn hit_probability_matches_grid_count() {
    for k in [2, 3] {
        for d in [1, 2] {
            let m = 1u64 << k;
            let total = (m - 1).pow(d as u32);
            for c in feasible_classes(g(k), d, DEFAULT_ENUM_LIMIT).unwrap() {
                let core = core_box(&c).unwrap();
                let mut hits = 0u64;
                for idx in 0..total {
                    let pt: Vec<u64> = (0..d)
                        .map(|a| idx / (m - 1).pow(a as u32) % (m - 1) + 1)
                        .collect();
                    hits += core.contains(&pt) as u64;
                }
                let expected = BigRational::new(BigInt::from(hits), BigInt::from(total));
                assert_eq!(hit_probability(&c).unwrap(), expected, "{c}");
                assert!(expected > hit_lower_bound(g(k)));
                // per-point miss probability stays below exp(-2^(-k-4))
                assert!(1.0 - rational_to_f64(&expected) <= class_miss_bound(g(k)));
            }
        }
    }
}

#[test]
fn exact_failure_is_bounded_and_non_increasing() {
    for (k, d, max_n) in [(2u32, 1usize, 8usize), (2, 2, 4), (3, 1, 6)] {
        let mut prev: Option<BigRational> = None;
        for n in 1..=max_n {
            let p = exact_failure_probability(g(k), d, n, DEFAULT_OUTCOME_LIMIT).unwrap();
            let ub = union_failure_bound(g(k), d, n as u64).exp().min(1.0);
            assert!(rational_to_f64(&p) <= ub + 1e-15, "k={k} d={d} n={n}");
            if let Some(q) = &prev {
                assert!(&p <= q, "k={k} d={d} n={n}");
            }
            prev = Some(p);
        }
    }
}

#[test]
fn exact_failure_guard() {
    assert!(exact_failure_probability(g(3), 3, 10, 1000).is_err());
}

proptest! {
    #[test]
    fn intermediate_below_theorem1(eps in 0.001f64..0.499, d in 2usize..10_000) {
        prop_assert!(n_intermediate(eps, d).unwrap() <= n_theorem1(eps, d).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn n_required_below_theorem1_at_grid_eps(k in 2u32..=20, d in 2usize..10_000) {
        let eps = (-(k as f64)).exp2();
        prop_assert!(n_required(g(k), d) as f64 <= n_theorem1(eps, d).unwrap());
    }

    #[test]
    fn theorem1_below_abstract(eps in 0.001f64..0.499, d in 2usize..100_000) {
        prop_assert!(n_theorem1(eps, d).unwrap() <= n_abstract(eps, d).unwrap());
    }

    #[test]
    fn theorem1_decreasing_in_eps(a in 0.001f64..0.499, b in 0.001f64..0.499, d in 2usize..1000) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(n_theorem1(hi, d).unwrap() <= n_theorem1(lo, d).unwrap());
    }

    #[test]
    fn inversion_is_tight(n in 1_000u64..100_000_000, d in 2usize..200) {
        let eps = disp_upper_from_n(n, d).unwrap();
        if eps < 0.5 {
            prop_assert!(n_theorem1(eps, d).unwrap() <= n as f64);
            let below = eps * (1.0 - 2e-9);
            prop_assert!(n_theorem1(below, d).unwrap() > n as f64);
        }
        prop_assert!(lower_bound_ahr(n, d).unwrap() <= eps);
    }

    #[test]
    fn k_from_eps_brackets(eps in 1e-6f64..0.499) {
        let k = k_from_epsilon(eps).unwrap().k();
        let t = (-(k as f64)).exp2();
        prop_assert!(t <= eps && eps < 2.0 * t);
    }
}

#[test]
fn disp_upper_decreases_in_n() {
    for d in [2usize, 10, 100] {
        let mut prev = f64::INFINITY;
        for e in 0..=40 {
            let n = 10f64.powf(3.0 + e as f64 * 0.1).round() as u64;
            let eps = disp_upper_from_n(n, d).unwrap();
            assert!(eps <= prev, "d={d} n={n}");
            prev = eps;
        }
    }
}
