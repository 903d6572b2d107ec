use dispgrid::construct::{
    certify_dispersion_leq, derive_seed, empirical_min_n, full_grid, generate_certified,
    monte_carlo_success, sample_grid_points, wilson_interval, Certifier, Z_95,
};
use dispgrid::probability::{exact_failure_probability, rational_to_f64, DEFAULT_OUTCOME_LIMIT};
use dispgrid::{largest_empty_box, GridParams, GridPointSet, PointSet, Volume, DEFAULT_ENUM_LIMIT};
use proptest::prelude::*;

fn g(k: u32) -> GridParams {
    GridParams::new(k).unwrap()
}

#[test]
fn marginals_are_uniform() {
    let pts = sample_grid_points(g(2), 1, 30_000, 11).unwrap();
    let mut counts = [0usize; 3];
    for p in pts.iter() {
        counts[(p[0] - 1) as usize] += 1;
    }
    for c in counts {
        let f = c as f64 / 30_000.0;
        assert!((f - 1.0 / 3.0).abs() < 0.01, "{counts:?}");
    }
}

#[test]
fn coordinates_are_uncorrelated() {
    let n = 30_000;
    let pts = sample_grid_points(g(3), 2, n, 12).unwrap();
    let xs: Vec<f64> = pts.iter().map(|p| p[0] as f64).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p[1] as f64).collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (mx, my) = (mean(&xs), mean(&ys));
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let vx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let vy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    assert!((cov / (vx * vy).sqrt()).abs() < 0.02);
}

#[test]
fn sampling_is_deterministic_and_prefix_stable() {
    let a = sample_grid_points(g(3), 2, 50, 99).unwrap();
    let b = sample_grid_points(g(3), 2, 50, 99).unwrap();
    assert_eq!(a, b);
    let c = sample_grid_points(g(3), 2, 20, 99).unwrap();
    assert_eq!(a.prefix(20), c);
    assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
}

#[test]
fn full_grid_certifies() {
    for k in 2..=4 {
        for d in 1..=3 {
            let grid = full_grid(g(k), d, DEFAULT_ENUM_LIMIT).unwrap();
            assert_eq!(grid.len() as u64, ((1u64 << k) - 1).pow(d as u32));
            let cert = certify_dispersion_leq(&grid, g(k), DEFAULT_ENUM_LIMIT).unwrap();
            assert!(cert.pass, "k={k} d={d}");
            assert!(cert.witness.is_none());
        }
    }
    let grid: PointSet = full_grid(g(2), 2, DEFAULT_ENUM_LIMIT).unwrap().into();
    assert_eq!(
        largest_empty_box(&grid).unwrap().volume,
        Volume::pow2_neg(2)
    );
}

#[test]
fn single_point_fails_with_witness() {
    let p = GridPointSet::from_points(g(2), 2, [[1u64, 1]]).unwrap();
    let cert = certify_dispersion_leq(&p, g(2), DEFAULT_ENUM_LIMIT).unwrap();
    assert!(!cert.pass);
    let w = dispgrid::core_box(&cert.witness.unwrap()).unwrap();
    assert!(!w.contains(&[1, 1]));
}

#[test]
fn resolution_mismatch_is_an_error() {
    let p = GridPointSet::from_points(g(3), 1, [[1u64]]).unwrap();
    assert!(certify_dispersion_leq(&p, g(2), DEFAULT_ENUM_LIMIT).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn certificate_is_sound(k in 2u32..=3, d in 1usize..=2, n in 1usize..=12, seed in any::<u64>()) {
        let pts = sample_grid_points(g(k), d, n, seed).unwrap();
        let cert = certify_dispersion_leq(&pts, g(k), DEFAULT_ENUM_LIMIT).unwrap();
        prop_assert_eq!(cert.pass, cert.witness.is_none());
        if cert.pass {
            let v = largest_empty_box(&PointSet::Grid(pts)).unwrap().volume;
            prop_assert!(v <= Volume::pow2_neg(k));
        }
    }

    #[test]
    fn wilson_interval_contains_rate(s in 0u64..1000, extra in 0u64..1000) {
        let t = s + extra + 1;
        let (lo, hi) = wilson_interval(s, t, Z_95);
        let rate = s as f64 / t as f64;
        prop_assert!(0.0 <= lo && lo <= rate + 1e-12 && rate <= hi + 1e-12 && hi <= 1.0);
    }
}

#[test]
fn generated_sets_certify() {
    let out = generate_certified(g(2), 2, 200, 5, 50, DEFAULT_ENUM_LIMIT).unwrap();
    let cert = certify_dispersion_leq(&out.points, g(2), DEFAULT_ENUM_LIMIT).unwrap();
    assert!(cert.pass);
    assert_eq!(
        out.points,
        sample_grid_points(g(2), 2, 200, out.seed).unwrap()
    );
    assert!(generate_certified(g(2), 2, 1, 5, 3, DEFAULT_ENUM_LIMIT).is_err());
}

#[test]
fn monte_carlo_tracks_exact_probability() {
    // in d = 1 with k = 2 the certificate is exact: pass iff all three cells are hit
    let exact = 1.0
        - rational_to_f64(&exact_failure_probability(g(2), 1, 4, DEFAULT_OUTCOME_LIMIT).unwrap());
    let mc = monte_carlo_success(g(2), 1, 4, 20_000, 3, DEFAULT_ENUM_LIMIT).unwrap();
    assert!(
        (mc.success_rate - exact).abs() < 0.02,
        "{} vs {exact}",
        mc.success_rate
    );
    assert!(mc.ci_low <= exact && exact <= mc.ci_high);
}

#[test]
fn monte_carlo_is_thread_independent() {
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| monte_carlo_success(g(2), 2, 40, 300, 8, DEFAULT_ENUM_LIMIT).unwrap())
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn empirical_min_n_small_case() {
    // P(all three cells hit) is 2/9 at n = 3, 4/9 at n = 4 and 50/81 at n = 5
    let r = empirical_min_n(g(2), 1, 0.5, 4000, 21, 1 << 10, DEFAULT_ENUM_LIMIT).unwrap();
    assert!(r.n_star == 4 || r.n_star == 5, "{r:?}");
    assert!(r.rate_below < 0.5 && r.rate_at_n_star >= 0.5);
    assert!(r.within_n_required);
}

#[test]
fn certifier_reuse_matches_one_shot() {
    let cert = Certifier::new(g(3), 2, DEFAULT_ENUM_LIMIT).unwrap();
    for seed in 0..20 {
        let pts = sample_grid_points(g(3), 2, 60, seed).unwrap();
        assert_eq!(
            cert.certify(&pts).unwrap(),
            certify_dispersion_leq(&pts, g(3), DEFAULT_ENUM_LIMIT).unwrap()
        );
    }
}
