//! Random grid point sets, the core-box dispersion certificate, and Monte
//! Carlo estimates of how often a random set certifies.
//!
//! # Seeds
//!
//! Every attempt and trial draws from its own `ChaCha8Rng`, seeded with
//! `splitmix64(master + (index + 1) * 0x9E37_79B9_7F4A_7C15)`. Trials are
//! therefore independent of scheduling, and parallel runs reproduce serial
//! ones bit for bit. Points are drawn one at a time, coordinates in order, so
//! the first `n` points of a stream do not depend on how many are drawn.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{check_guard, sat_pow, GridParams, GridPointSet};
use crate::partition::{core_box, feasible_classes, BoxClass, CoreBox};

/// Name of the generator family, reported in output metadata.
pub const RNG_NAME: &str = "ChaCha8Rng";
/// Seed derivation scheme, reported in output metadata.
pub const SEED_SCHEME: &str = "splitmix64(master+(index+1)*0x9E3779B97F4A7C15)";

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Largest dense occupancy table the certifier builds, in cells.
const DENSE_TABLE_LIMIT: u128 = 1 << 22;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of stream `index` under `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// `n` points with i.i.d. uniform coordinates on `M_k`.
///
/// Integer sampling is unbiased (widening multiply with rejection).
pub fn sample_grid_points(
    params: GridParams,
    d: usize,
    n: usize,
    seed: u64,
) -> Result<GridPointSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = params.m();
    let coords: Vec<u64> = (0..n * d).map(|_| rng.gen_range(1..m)).collect();
    GridPointSet::from_flat(params, d, coords)
}

/// Every point of `M_k^d`, once each, in lexicographic order.
pub fn full_grid(params: GridParams, d: usize, limit: u128) -> Result<GridPointSet> {
    check_guard("grid points", sat_pow(params.size() as u128, d), limit)?;
    let m = params.m();
    let coords: Vec<u64> = crate::partition::Odometer::new(vec![1; d], vec![m - 1; d])
        .flatten()
        .collect();
    GridPointSet::from_flat(params, d, coords)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CertificateResult {
    pub pass: bool,
    pub checked_classes: u64,
    /// First class (in enumeration order) whose core box holds no point.
    pub witness: Option<BoxClass>,
}

/// Checks point sets against the core boxes of every feasible class for a
/// fixed `(k, d)`. Building the class list once lets many sets reuse it.
#[derive(Clone, Debug)]
pub struct Certifier {
    params: GridParams,
    dim: usize,
    classes: Vec<BoxClass>,
    cores: Vec<CoreBox>,
}

impl Certifier {
    pub fn new(params: GridParams, dim: usize, limit: u128) -> Result<Self> {
        let classes = feasible_classes(params, dim, limit)?;
        let cores = classes.iter().map(core_box).collect::<Result<Vec<_>>>()?;
        Ok(Certifier {
            params,
            dim,
            classes,
            cores,
        })
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    /// Passes iff every core box holds a point, which implies every box of
    /// volume above `2^-k` does. A failure says nothing about the dispersion.
    pub fn certify(&self, points: &GridPointSet) -> Result<CertificateResult> {
        if points.params() != self.params {
            return Err(Error::ResolutionMismatch {
                expected: self.params.k(),
                found: points.params().k(),
            });
        }
        if points.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: points.dim(),
            });
        }
        let m = self.params.m() as u128;
        let table = if sat_pow(m, self.dim) <= DENSE_TABLE_LIMIT {
            Some(PrefixCounts::new(points))
        } else {
            None
        };
        for (i, core) in self.cores.iter().enumerate() {
            let hit = match &table {
                Some(t) => t.any_in(core.lo(), core.hi()),
                None => points.iter().any(|p| core.contains(p)),
            };
            if !hit {
                return Ok(CertificateResult {
                    pass: false,
                    checked_classes: i as u64 + 1,
                    witness: Some(self.classes[i].clone()),
                });
            }
        }
        Ok(CertificateResult {
            pass: true,
            checked_classes: self.cores.len() as u64,
            witness: None,
        })
    }
}

/// d-dimensional prefix sums of grid occupancy, indexed by numerator with a
/// zero layer at index 0 on every axis.
struct PrefixCounts {
    dim: usize,
    side: usize,
    sums: Vec<u32>,
}

impl PrefixCounts {
    fn new(points: &GridPointSet) -> Self {
        let dim = points.dim();
        let side = points.params().m() as usize;
        let mut sums = vec![0u32; side.pow(dim as u32)];
        for p in points.iter() {
            sums[Self::index(side, p.iter().map(|&x| x as usize))] += 1;
        }
        let mut stride = 1;
        for _ in 0..dim {
            for i in 0..sums.len() {
                if (i / stride) % side != 0 {
                    sums[i] += sums[i - stride];
                }
            }
            stride *= side;
        }
        PrefixCounts { dim, side, sums }
    }

    /// Row-major index, first axis slowest.
    fn index(side: usize, coords: impl Iterator<Item = usize>) -> usize {
        coords.fold(0, |acc, c| acc * side + c)
    }

    /// Whether any point lies in the closed numerator box `[lo, hi]`.
    fn any_in(&self, lo: &[u64], hi: &[u64]) -> bool {
        let mut total: i64 = 0;
        for corner in 0..1usize << self.dim {
            let mut negative = false;
            let idx = Self::index(
                self.side,
                (0..self.dim).map(|a| {
                    if corner >> a & 1 == 1 {
                        negative = !negative;
                        lo[a] as usize - 1
                    } else {
                        hi[a] as usize
                    }
                }),
            );
            let v = self.sums[idx] as i64;
            total += if negative { -v } else { v };
        }
        total > 0
    }
}

pub fn certify_dispersion_leq(
    points: &GridPointSet,
    params: GridParams,
    limit: u128,
) -> Result<CertificateResult> {
    if points.params() != params {
        return Err(Error::ResolutionMismatch {
            expected: params.k(),
            found: points.params().k(),
        });
    }
    Certifier::new(params, points.dim(), limit)?.certify(points)
}

#[derive(Clone, Debug)]
pub struct Generated {
    pub points: GridPointSet,
    /// 1-based index of the successful attempt.
    pub attempts: u64,
    pub seed: u64,
}

/// Samples until the certificate passes. Attempt `i` (0-based) uses
/// `derive_seed(seed, i)`.
pub fn generate_certified(
    params: GridParams,
    d: usize,
    n: usize,
    seed: u64,
    max_attempts: u64,
    limit: u128,
) -> Result<Generated> {
    if n == 0 || max_attempts == 0 {
        return Err(Error::Domain(
            "n and max_attempts must be at least 1".into(),
        ));
    }
    let certifier = Certifier::new(params, d, limit)?;
    let mut best: Option<CertificateResult> = None;
    for attempt in 0..max_attempts {
        let attempt_seed = derive_seed(seed, attempt);
        let points = sample_grid_points(params, d, n, attempt_seed)?;
        let cert = certifier.certify(&points)?;
        if cert.pass {
            return Ok(Generated {
                points,
                attempts: attempt + 1,
                seed: attempt_seed,
            });
        }
        if best
            .as_ref()
            .is_none_or(|b| cert.checked_classes > b.checked_classes)
        {
            best = Some(cert);
        }
    }
    Err(Error::AttemptsExhausted {
        attempts: max_attempts,
        witness: best.and_then(|b| b.witness),
    })
}

/// Wilson score interval for `successes` out of `trials` at normal quantile `z`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonteCarloSummary {
    pub k: u32,
    pub d: usize,
    pub n: usize,
    pub trials: u64,
    pub successes: u64,
    pub success_rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub master_seed: u64,
    pub rng: String,
}

/// Certifies `trials` independent random sets; trial `i` uses
/// `derive_seed(master_seed, i)`. Runs on the current rayon pool.
pub fn monte_carlo_success(
    params: GridParams,
    d: usize,
    n: usize,
    trials: u64,
    master_seed: u64,
    limit: u128,
) -> Result<MonteCarloSummary> {
    let certifier = Certifier::new(params, d, limit)?;
    monte_carlo_with(&certifier, n, trials, master_seed)
}

pub fn monte_carlo_with(
    certifier: &Certifier,
    n: usize,
    trials: u64,
    master_seed: u64,
) -> Result<MonteCarloSummary> {
    if trials == 0 {
        return Err(Error::Domain("trials must be at least 1".into()));
    }
    let (params, d) = (certifier.params, certifier.dim);
    let successes = (0..trials)
        .into_par_iter()
        .map(|i| -> Result<u64> {
            let points = sample_grid_points(params, d, n, derive_seed(master_seed, i))?;
            Ok(certifier.certify(&points)?.pass as u64)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    let (ci_low, ci_high) = wilson_interval(successes, trials, Z_95);
    Ok(MonteCarloSummary {
        k: params.k(),
        d,
        n,
        trials,
        successes,
        success_rate: successes as f64 / trials as f64,
        ci_low,
        ci_high,
        master_seed,
        rng: RNG_NAME.to_string(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MinNResult {
    pub k: u32,
    pub d: usize,
    pub target_rate: f64,
    pub trials: u64,
    pub seed: u64,
    pub n_star: usize,
    pub rate_at_n_star: f64,
    /// Estimated rate at `n_star - 1` (0 when `n_star = 1`).
    pub rate_below: f64,
    pub n_required: u64,
    pub within_n_required: bool,
}

/// Smallest `n` whose estimated certification rate reaches `target_rate`.
///
/// Every `n` is estimated from the same trial streams; since trial `i` at `n`
/// sees a prefix of its points at `n + 1`, the estimate is non-decreasing in
/// `n` and bisection is exact.
pub fn empirical_min_n(
    params: GridParams,
    d: usize,
    target_rate: f64,
    trials: u64,
    seed: u64,
    max_n: usize,
    limit: u128,
) -> Result<MinNResult> {
    if !(target_rate > 0.0 && target_rate < 1.0) {
        return Err(Error::Domain(format!(
            "target rate must lie in (0, 1), got {target_rate}"
        )));
    }
    let certifier = Certifier::new(params, d, limit)?;
    let rate = |n: usize| -> Result<f64> {
        Ok(monte_carlo_with(&certifier, n, trials, seed)?.success_rate)
    };

    let mut hi = 1usize;
    let mut hi_rate = rate(hi)?;
    while hi_rate < target_rate {
        if hi >= max_n {
            return Err(Error::SearchCap { cap: max_n as u64 });
        }
        hi = (hi * 2).min(max_n);
        hi_rate = rate(hi)?;
    }
    // invariant: rate(lo) < target <= rate(hi), with rate(0) = 0
    let mut lo = hi / 2;
    let mut lo_rate = if lo == 0 { 0.0 } else { rate(lo)? };
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let r = rate(mid)?;
        if r >= target_rate {
            hi = mid;
            hi_rate = r;
        } else {
            lo = mid;
            lo_rate = r;
        }
    }
    let required = crate::bounds::n_required(params, d);
    Ok(MinNResult {
        k: params.k(),
        d,
        target_rate,
        trials,
        seed,
        n_star: hi,
        rate_at_n_star: hi_rate,
        rate_below: lo_rate,
        n_required: required,
        within_n_required: hi as u64 <= required,
    })
}
