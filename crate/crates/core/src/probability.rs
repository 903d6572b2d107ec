//! Hit probabilities of core boxes, the per-point lower bound `2^(-k-4)`, the
//! inequality behind it, union failure bounds, and exact small-instance
//! failure probabilities.
//!
//! Probabilities that must be exact are [`BigRational`]s. Bounds that may be
//! astronomically large or small are carried as natural logarithms.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::empty_box::{has_empty_box_above_with, Volume};
use crate::error::{Error, Result};
use crate::grid::{check_guard, sat_pow, GridParams, GridPointSet, PointSet};
use crate::partition::{
    class_is_feasible, enumerate_feasible_classes, ln_pair_count_bound, m1_of, BoxClass,
};

const LN_2: f64 = std::f64::consts::LN_2;

/// Default cap on the outcomes enumerated by [`exact_failure_probability`].
pub const DEFAULT_OUTCOME_LIMIT: u128 = 10_000_000;

/// Slack for real-valued comparisons of the intermediate chain.
pub const CHAIN_SLACK: f64 = 1e-12;

/// `P(x in core box)` for `x` uniform on `M_k^d`: `prod s_l / (2^k - 1)`.
pub fn hit_probability(c: &BoxClass) -> Result<BigRational> {
    if !class_is_feasible(c) {
        return Err(Error::InfeasibleClass);
    }
    let size = c.params().size();
    let num = c.s().iter().fold(BigInt::one(), |acc, &s| acc * s);
    let den = c.s().iter().fold(BigInt::one(), |acc, _| acc * size);
    Ok(BigRational::new(num, den))
}

/// `2^(-k-4)`.
pub fn hit_lower_bound(params: GridParams) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::one() << (params.k() as usize + 4))
}

/// `exp(-2^(-k-4))`, the bound on the chance one point misses a class.
pub fn class_miss_bound(params: GridParams) -> f64 {
    (-(-(params.k() as f64 + 4.0)).exp2()).exp()
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

#[derive(Clone, Debug, PartialEq)]
pub struct HitProbabilityAudit {
    pub k: u32,
    pub d: usize,
    pub classes: u64,
    pub min_hit_probability: BigRational,
    pub min_witness: Option<BoxClass>,
    pub lower_bound: BigRational,
    /// Classes whose hit probability is not strictly above `2^(-k-4)`.
    pub bound_violations: Vec<BoxClass>,
    /// Classes violating `hit >= (1 - 1/(k 2^k))^m1 * V^(k/(k-1))` beyond slack.
    pub chain_violations: Vec<BoxClass>,
}

impl HitProbabilityAudit {
    pub fn pass(&self) -> bool {
        self.bound_violations.is_empty() && self.chain_violations.is_empty()
    }
}

/// Checks the hit-probability lower bound on every feasible class.
///
/// Also evaluates the intermediate estimate with the class's
/// attainable maximum volume in place of `|B|`, which is its worst case.
pub fn audit_hit_probability(
    params: GridParams,
    d: usize,
    limit: u128,
) -> Result<HitProbabilityAudit> {
    let bound = hit_lower_bound(params);
    let k = params.k() as f64;
    let shrink = 1.0 - 1.0 / (k * params.m() as f64);
    let exponent = k / (k - 1.0);

    let mut classes = 0u64;
    let mut min: Option<(BigRational, BoxClass)> = None;
    let mut bound_violations = Vec::new();
    let mut chain_violations = Vec::new();
    for c in enumerate_feasible_classes(params, d, false, limit)? {
        classes += 1;
        let hit = hit_probability(&c)?;
        if hit <= bound {
            bound_violations.push(c.clone());
        }
        let chain =
            shrink.powi(m1_of(&c) as i32) * c.attainable_max_volume().to_f64().powf(exponent);
        if rational_to_f64(&hit) < chain - CHAIN_SLACK {
            chain_violations.push(c.clone());
        }
        if min.as_ref().is_none_or(|(m, _)| hit < *m) {
            min = Some((hit, c));
        }
    }
    let (min_hit_probability, min_witness) = match min {
        Some((h, c)) => (h, Some(c)),
        None => (BigRational::one(), None),
    };
    Ok(HitProbabilityAudit {
        k: params.k(),
        d,
        classes,
        min_hit_probability,
        min_witness,
        lower_bound: bound,
        bound_violations,
        chain_violations,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KeyInequality {
    pub k: u32,
    /// `min_j j / (j+1)^(k/(k-1))` over `j = 1..=2^k - 2`.
    pub lhs_min: f64,
    pub argmin_j: u64,
    /// `(2^k - 1) 2^(-k^2/(k-1)) (1 - 1/(k 2^k))`.
    pub rhs: f64,
    pub margin: f64,
    pub holds: bool,
}

fn key_rhs(params: GridParams) -> f64 {
    let k = params.k() as f64;
    let m = params.m() as f64;
    (m - 1.0) * (-(k * k) / (k - 1.0)).exp2() * (1.0 - 1.0 / (k * m))
}

fn key_lhs(j: u64, k: f64) -> f64 {
    let j = j as f64;
    j / (j + 1.0).powf(k / (k - 1.0))
}

/// Per-`j` margins `j/(j+1)^(k/(k-1)) - rhs` for `j = 1..=2^k - 2`.
pub fn key_inequality_margins(params: GridParams) -> impl Iterator<Item = (u64, f64)> {
    let rhs = key_rhs(params);
    let k = params.k() as f64;
    (1..=params.m() - 2).map(move |j| (j, key_lhs(j, k) - rhs))
}

/// Evaluates the inequality that turns `j/(2^k - 1)` into a power of
/// `(j+1)/2^k` for every `j = 1..=2^k - 2`.
pub fn check_key_inequality(params: GridParams) -> KeyInequality {
    let rhs = key_rhs(params);
    let (argmin_j, margin) =
        key_inequality_margins(params).fold((0, f64::INFINITY), |best, (j, m)| {
            if m < best.1 {
                (j, m)
            } else {
                best
            }
        });
    let lhs_min = key_lhs(argmin_j, params.k() as f64);
    KeyInequality {
        k: params.k(),
        lhs_min,
        argmin_j,
        rhs,
        margin,
        holds: margin >= 0.0,
    }
}

/// `ln` of the union bound `2^(k 2^k log2(2^(k+1) d)) exp(-n 2^(-k-4))`.
pub fn union_failure_bound(params: GridParams, d: usize, n: u64) -> f64 {
    ln_pair_count_bound(params, d) - n as f64 * per_point_rate(params)
}

/// `ln` of the dimension-linear bound `2^(2kd) exp(-n 2^(-k-4))`.
pub fn rudolf_failure_bound(params: GridParams, d: usize, n: u64) -> f64 {
    2.0 * params.k() as f64 * d as f64 * LN_2 - n as f64 * per_point_rate(params)
}

fn per_point_rate(params: GridParams) -> f64 {
    (-(params.k() as f64 + 4.0)).exp2()
}

/// Smallest `n` with `ln_count - n 2^(-k-4) < 0`.
fn threshold_n(ln_count: f64, params: GridParams) -> u64 {
    (ln_count / per_point_rate(params)).floor() as u64 + 1
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FailureBoundReport {
    pub k: u32,
    pub d: usize,
    pub n: u64,
    pub ln_union_bound: f64,
    pub ln_rudolf_bound: f64,
    /// Smallest `n` for which the union bound drops below one.
    pub union_threshold_n: u64,
    pub rudolf_threshold_n: u64,
}

pub fn failure_bound_report(params: GridParams, d: usize, n: u64) -> FailureBoundReport {
    FailureBoundReport {
        k: params.k(),
        d,
        n,
        ln_union_bound: union_failure_bound(params, d, n),
        ln_rudolf_bound: rudolf_failure_bound(params, d, n),
        union_threshold_n: threshold_n(ln_pair_count_bound(params, d), params),
        rudolf_threshold_n: threshold_n(2.0 * params.k() as f64 * d as f64 * LN_2, params),
    }
}

/// Exact `P(some box of volume > 2^-k misses all n points)` for i.i.d. uniform
/// points on `M_k^d`.
///
/// The outcome space is ordered `n`-tuples. Outcomes only matter through
/// their multiset, so multisets are enumerated and weighted by their number
/// of orderings.
pub fn exact_failure_probability(
    params: GridParams,
    d: usize,
    n: usize,
    limit: u128,
) -> Result<BigRational> {
    if d == 0 {
        return Err(Error::Domain("dimension must be at least 1".into()));
    }
    let cells = sat_pow(params.size() as u128, d);
    let outcomes = sat_pow(cells, n);
    check_guard("outcomes", outcomes, limit)?;
    let cells = cells as u64;
    let threshold = Volume::pow2_neg(params.k());

    let factorials: Vec<BigUint> = (0..=n as u64)
        .scan(BigUint::one(), |acc, i| {
            if i > 0 {
                *acc *= i;
            }
            Some(acc.clone())
        })
        .collect();

    let first: Vec<u64> = if n == 0 {
        vec![0]
    } else {
        (0..cells).collect()
    };
    let failures: BigUint = first
        .par_iter()
        .map(|&start| -> Result<BigUint> {
            let mut total = BigUint::zero();
            let mut chosen = Vec::with_capacity(n);
            if n > 0 {
                chosen.push(start);
            }
            visit_multisets(cells, n, &mut chosen, &mut |ms| {
                let points = cell_points(params, d, ms)?;
                if has_empty_box_above_with(&PointSet::Grid(points), &threshold, u128::MAX)?
                    .is_some()
                {
                    total += orderings(ms, &factorials);
                }
                Ok(())
            })?;
            Ok(total)
        })
        .try_reduce(BigUint::zero, |a, b| Ok(a + b))?;
    Ok(BigRational::new(
        BigInt::from(failures),
        BigInt::from(BigUint::from(cells).pow(n as u32)),
    ))
}

/// Calls `f` on every non-decreasing extension of `chosen` to length `n`.
fn visit_multisets(
    cells: u64,
    n: usize,
    chosen: &mut Vec<u64>,
    f: &mut dyn FnMut(&[u64]) -> Result<()>,
) -> Result<()> {
    if chosen.len() == n {
        return f(chosen);
    }
    let from = chosen.last().copied().unwrap_or(0);
    for c in from..cells {
        chosen.push(c);
        visit_multisets(cells, n, chosen, f)?;
        chosen.pop();
    }
    Ok(())
}

/// Multinomial `n! / prod mult!` for a sorted multiset.
fn orderings(sorted: &[u64], factorials: &[BigUint]) -> BigUint {
    let mut result = factorials[sorted.len()].clone();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        result /= &factorials[j - i];
        i = j;
    }
    result
}

/// Decodes cell indices (mixed radix `2^k - 1`) into grid points.
fn cell_points(params: GridParams, d: usize, cells: &[u64]) -> Result<GridPointSet> {
    let size = params.size();
    let mut flat = Vec::with_capacity(cells.len() * d);
    for &c in cells {
        let mut rest = c;
        let start = flat.len();
        for _ in 0..d {
            flat.push(rest % size + 1);
            rest /= size;
        }
        flat[start..].reverse();
    }
    GridPointSet::from_flat(params, d, flat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DEFAULT_ENUM_LIMIT;
    use crate::partition::core_box;

    fn g(k: u32) -> GridParams {
        GridParams::new(k).unwrap()
    }

    fn ratio(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    fn class(k: u32, p: &[u64], s: &[u64]) -> BoxClass {
        BoxClass::new(g(k), p.to_vec(), s.to_vec()).unwrap()
    }

    #[test]
    fn hit_probability_examples() {
        assert_eq!(hit_probability(&class(2, &[2], &[1])).unwrap(), ratio(1, 3));
        assert_eq!(
            hit_probability(&class(2, &[1, 1], &[3, 3])).unwrap(),
            ratio(1, 1)
        );
        assert_eq!(
            hit_probability(&class(2, &[1, 2], &[2, 1])).unwrap(),
            ratio(2, 9)
        );
        assert!(hit_probability(&class(2, &[3], &[3])).is_err());
    }

    #[test]
    fn hit_probability_matches_grid_count() {
        // (p,s) = ((1/4,1/2),(2,1)): points (1,2),(2,2) out of 9
        let c = class(2, &[1, 2], &[2, 1]);
        let cb = core_box(&c).unwrap();
        let hits = (1..4u64)
            .flat_map(|a| (1..4u64).map(move |b| [a, b]))
            .filter(|p| cb.contains(p))
            .count();
        assert_eq!(ratio(hits as i64, 9), hit_probability(&c).unwrap());
    }

    #[test]
    fn hit_bound_constants() {
        assert_eq!(hit_lower_bound(g(2)), ratio(1, 64));
        assert_eq!(hit_lower_bound(g(3)), ratio(1, 128));
        assert!((class_miss_bound(g(2)) - 0.984_496_437).abs() < 1e-8);
    }

    #[test]
    fn audit_k2_d1() {
        let a = audit_hit_probability(g(2), 1, DEFAULT_ENUM_LIMIT).unwrap();
        assert!(a.pass());
        assert_eq!(a.classes, 6);
        assert_eq!(a.min_hit_probability, ratio(1, 3));
    }

    #[test]
    fn key_inequality_k2() {
        let r = check_key_inequality(g(2));
        assert!(r.holds);
        assert_eq!(r.argmin_j, 2);
        assert!((r.lhs_min - 2.0 / 9.0).abs() < 1e-15);
        assert!((r.rhs - 21.0 / 128.0).abs() < 1e-15);
        let margins: Vec<(u64, f64)> = key_inequality_margins(g(2)).collect();
        assert_eq!(margins.len(), 2);
        assert!((margins[0].1 - (0.25 - 21.0 / 128.0)).abs() < 1e-15);
    }

    #[test]
    fn key_inequality_minimum_at_an_end() {
        for k in 2..=14 {
            let r = check_key_inequality(g(k));
            assert!(r.holds, "k={k}");
            assert!(
                r.argmin_j == 1 || r.argmin_j == g(k).m() - 2,
                "k={k} j={}",
                r.argmin_j
            );
        }
    }

    #[test]
    fn scaled_form_of_key_inequality() {
        // j/(2^k-1) >= (1 - 1/(k 2^k)) ((j+1)/2^k)^(k/(k-1))
        for k in 2..=10u32 {
            let kf = k as f64;
            let m = (1u64 << k) as f64;
            for j in 1..(1u64 << k) - 1 {
                let jf = j as f64;
                let lhs = jf / (m - 1.0);
                let rhs = (1.0 - 1.0 / (kf * m)) * ((jf + 1.0) / m).powf(kf / (kf - 1.0));
                assert!(lhs >= rhs - 1e-15, "k={k} j={j}");
            }
        }
    }

    #[test]
    fn union_bound_examples() {
        let ln2 = std::f64::consts::LN_2;
        assert!((union_failure_bound(g(2), 2, 2048) - (32.0 * ln2 - 32.0)).abs() < 1e-12);
        assert!((union_failure_bound(g(2), 2, 0) - 22.18).abs() < 0.01);
        assert!((rudolf_failure_bound(g(2), 2, 2048) - (8.0 * ln2 - 32.0)).abs() < 1e-12);
        assert!((rudolf_failure_bound(g(2), 2, 2048) + 26.45).abs() < 0.01);
    }

    #[test]
    fn threshold_n_crosses_zero() {
        let r = failure_bound_report(g(2), 2, 0);
        assert!(union_failure_bound(g(2), 2, r.union_threshold_n) < 0.0);
        assert!(union_failure_bound(g(2), 2, r.union_threshold_n - 1) >= 0.0);
        assert!(rudolf_failure_bound(g(2), 2, r.rudolf_threshold_n) < 0.0);
        assert!(rudolf_failure_bound(g(2), 2, r.rudolf_threshold_n - 1) >= 0.0);
    }

    #[test]
    fn exact_failure_small_cases() {
        assert_eq!(
            exact_failure_probability(g(2), 1, 1, DEFAULT_OUTCOME_LIMIT).unwrap(),
            ratio(1, 1)
        );
        assert_eq!(
            exact_failure_probability(g(2), 1, 3, DEFAULT_OUTCOME_LIMIT).unwrap(),
            ratio(7, 9)
        );
        assert_eq!(
            exact_failure_probability(g(2), 1, 0, DEFAULT_OUTCOME_LIMIT).unwrap(),
            ratio(1, 1)
        );
        assert!(matches!(
            exact_failure_probability(g(2), 2, 8, DEFAULT_OUTCOME_LIMIT),
            Err(Error::GuardExceeded { .. })
        ));
    }

    #[test]
    fn orderings_are_multinomials() {
        let f: Vec<BigUint> = [1u32, 1, 2, 6, 24]
            .iter()
            .map(|&x| BigUint::from(x))
            .collect();
        assert_eq!(orderings(&[0, 0, 1, 2], &f), BigUint::from(12u32));
        assert_eq!(orderings(&[3, 3, 3, 3], &f), BigUint::from(1u32));
    }
}
