//! Box classes: the partition of all boxes with volume above `2^-k` by
//! per-axis length bucket `s` and infimum bucket `p`.
//!
//! A box `I_1 x ... x I_d` belongs to class `(p, s)` when, on every axis,
//! `s/2^k < |I| <= (s+1)/2^k` and `inf I` lies in `[p - 1/2^k, p)`. Every box in a
//! nonempty class contains the grid points of the closed core box
//! `prod [p, p + (s-1)/2^k]`, which is what makes core-box hitting a dispersion
//! certificate.

use std::fmt;

use num_bigint::BigUint;
use num_traits::One;

use crate::dyadic::Dyadic;
use crate::empty_box::{DyadicBox, Endpoints, Volume};
use crate::error::{Error, Result};
use crate::grid::{check_guard, sat_pow, GridParams};

const LN_2: f64 = std::f64::consts::LN_2;

/// A class index `(p, s)`: `p` holds grid numerators in `1..2^k`, `s` holds
/// length buckets in `0..2^k`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BoxClass {
    params: GridParams,
    p: Vec<u64>,
    s: Vec<u64>,
}

impl BoxClass {
    pub fn new(params: GridParams, p: Vec<u64>, s: Vec<u64>) -> Result<Self> {
        if p.len() != s.len() {
            return Err(Error::DimensionMismatch {
                expected: p.len(),
                found: s.len(),
            });
        }
        if p.is_empty() {
            return Err(Error::Domain("class dimension must be at least 1".into()));
        }
        let m = params.m();
        if let Some(bad) = p.iter().find(|&&a| !params.is_valid_numerator(a)) {
            return Err(Error::Domain(format!("p numerator {bad} outside 1..{m}")));
        }
        if let Some(bad) = s.iter().find(|&&b| b >= m) {
            return Err(Error::Domain(format!("s entry {bad} outside 0..{m}")));
        }
        Ok(BoxClass { params, p, s })
    }

    pub fn params(&self) -> GridParams {
        self.params
    }

    pub fn dim(&self) -> usize {
        self.p.len()
    }

    /// Infimum buckets, as numerators over `2^k`.
    pub fn p(&self) -> &[u64] {
        &self.p
    }

    /// Length buckets.
    pub fn s(&self) -> &[u64] {
        &self.s
    }

    /// Axes whose length bucket is not maximal, `{l : s_l < 2^k - 1}`.
    pub fn non_maximal_axes(&self) -> Vec<usize> {
        let top = self.params.m() - 1;
        (0..self.dim()).filter(|&l| self.s[l] < top).collect()
    }

    /// Supremum of member volumes, `prod min((s+1)/2^k, 1 - p + 1/2^k)`.
    pub fn attainable_max_volume(&self) -> Dyadic {
        let m = self.params.m();
        let k = self.params.k() as u64;
        self.p
            .iter()
            .zip(&self.s)
            .fold(Dyadic::one(), |v, (&p, &s)| {
                v.mul_frac((s + 1).min(m - p + 1), k)
            })
    }
}

impl fmt::Display for BoxClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "k={} p=(", self.params.k())?;
        write_list(f, &self.p)?;
        write!(f, ") s=(")?;
        write_list(f, &self.s)?;
        write!(f, ")")
    }
}

fn write_list(f: &mut fmt::Formatter<'_>, xs: &[u64]) -> fmt::Result {
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            write!(f, ",")?;
        }
        write!(f, "{x}")?;
    }
    Ok(())
}

/// The closed box `prod [p, p + (s-1)/2^k]`; sides may be single points.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoreBox {
    params: GridParams,
    lo: Vec<u64>,
    hi: Vec<u64>,
}

impl CoreBox {
    pub fn params(&self) -> GridParams {
        self.params
    }

    /// Lower corner numerators.
    pub fn lo(&self) -> &[u64] {
        &self.lo
    }

    /// Upper corner numerators (inclusive).
    pub fn hi(&self) -> &[u64] {
        &self.hi
    }

    pub fn contains(&self, point: &[u64]) -> bool {
        point
            .iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(x, (l, h))| l <= x && x <= h)
    }

    /// Number of grid points inside, `prod s_l`.
    pub fn grid_count(&self) -> BigUint {
        self.lo
            .iter()
            .zip(&self.hi)
            .fold(BigUint::one(), |acc, (l, h)| acc * (h - l + 1))
    }
}

impl fmt::Display for CoreBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = self.params.k();
        for (i, (l, h)) in self.lo.iter().zip(&self.hi).enumerate() {
            if i > 0 {
                write!(f, " x ")?;
            }
            write!(f, "[{l}/2^{k},{h}/2^{k}]")?;
        }
        Ok(())
    }
}

/// The unique class of a box with volume above `2^-k`.
pub fn classify_box(b: &DyadicBox, params: GridParams) -> Result<BoxClass> {
    let vol = b.volume();
    if vol <= Volume::pow2_neg(params.k()) {
        return Err(Error::NotInOmega(vol.to_string()));
    }
    let m = params.m();
    let k = params.k();
    let (p, s): (Vec<u64>, Vec<u64>) = match b.endpoints() {
        Endpoints::Dyadic { exp, lo, hi } => lo
            .iter()
            .zip(hi)
            .map(|(&l, &h)| {
                // |I| * 2^k and inf I * 2^k, rounded up / down exactly
                let len_scaled = ceil_rescale(h - l, *exp, k);
                let inf_scaled = floor_rescale(l, *exp, k);
                (inf_scaled + 1, len_scaled - 1)
            })
            .unzip(),
        Endpoints::Real { lo, hi } => lo
            .iter()
            .zip(hi)
            .map(|(&l, &h)| {
                let len_scaled = ((h - l) * m as f64).ceil() as u64;
                let inf_scaled = (l * m as f64).floor() as u64;
                (inf_scaled + 1, len_scaled.max(1) - 1)
            })
            .unzip(),
    };
    // Boxes above the volume threshold never start in the last grid cell.
    assert!(
        p.iter().all(|&a| a < m),
        "box {b} above 2^-{k} has an infimum in the top cell"
    );
    BoxClass::new(params, p, s)
}

/// `ceil(num / 2^from * 2^to)` for `num / 2^from <= 1`.
fn ceil_rescale(num: u64, from: u32, to: u32) -> u64 {
    if to >= from {
        num << (to - from)
    } else {
        let shift = from - to;
        let q = num >> shift;
        if num & ((1u64 << shift) - 1) != 0 {
            q + 1
        } else {
            q
        }
    }
}

fn floor_rescale(num: u64, from: u32, to: u32) -> u64 {
    if to >= from {
        num << (to - from)
    } else {
        num >> (from - to)
    }
}

/// Whether class `(p, s)` contains some box of volume above `2^-k`.
///
/// Requires every `s_l >= 1`, `p_l + s_l <= 2^k` (a side longer than `s_l/2^k`
/// starting at or after `p_l - 1/2^k` fits in `[0,1]`), and an attainable
/// maximum volume strictly above `2^-k`.
pub fn class_is_feasible(c: &BoxClass) -> bool {
    let m = c.params.m();
    if c.s.contains(&0) {
        return false;
    }
    if c.p.iter().zip(&c.s).any(|(&p, &s)| p + s > m) {
        return false;
    }
    volume_exceeds_threshold(
        c.p.iter().zip(&c.s).map(|(&p, &s)| (s + 1).min(m - p + 1)),
        c.dim(),
        m,
    )
}

/// `prod factors / m^d > 1/m`, i.e. `prod factors > m^(d-1)`, exactly.
fn volume_exceeds_threshold(
    factors: impl Iterator<Item = u64> + Clone,
    dim: usize,
    m: u64,
) -> bool {
    let fast = factors
        .clone()
        .try_fold(1u128, |acc, f| acc.checked_mul(f as u128));
    let rhs = (0..dim - 1).try_fold(1u128, |acc, _| acc.checked_mul(m as u128));
    match (fast, rhs) {
        (Some(l), Some(r)) => l > r,
        _ => {
            let lhs = factors.fold(BigUint::one(), |acc, f| acc * f);
            lhs > BigUint::from(m).pow((dim - 1) as u32)
        }
    }
}

pub fn core_box(c: &BoxClass) -> Result<CoreBox> {
    if !class_is_feasible(c) {
        return Err(Error::InfeasibleClass);
    }
    Ok(CoreBox {
        params: c.params,
        lo: c.p.clone(),
        hi: c.p.iter().zip(&c.s).map(|(&p, &s)| p + s - 1).collect(),
    })
}

/// Number of non-maximal length buckets, `#{l : s_l < 2^k - 1}`.
pub fn m1_of(c: &BoxClass) -> usize {
    let top = c.params.m() - 1;
    c.s.iter().filter(|&&s| s < top).count()
}

/// The threshold `ln(2) k 2^k` that bounds `m1` on nonempty classes.
pub fn a_k(params: GridParams) -> f64 {
    LN_2 * params.k() as f64 * params.m() as f64
}

/// `prod (2^k - s_l)`, the per-coordinate count of admissible `p` for `s`.
pub fn product_p_count(s: &[u64], params: GridParams) -> BigUint {
    let m = params.m();
    s.iter()
        .fold(BigUint::one(), |acc, &x| acc * m.saturating_sub(x))
}

/// `ln((4d/k)^A_k)`, the bound on the number of admissible `s` vectors.
pub fn ln_s_count_bound(params: GridParams, d: usize) -> f64 {
    a_k(params) * (4.0 * d as f64 / params.k() as f64).ln()
}

/// Natural log of the bound on the number of nonempty classes,
/// `2^(k 2^k log2(2^(k+1) d))`.
pub fn ln_pair_count_bound(params: GridParams, d: usize) -> f64 {
    let k = params.k() as f64;
    LN_2 * k * params.m() as f64 * (k + 1.0 + (d as f64).log2())
}

/// Number of `(s, p)` pairs the enumerator may visit.
pub fn enumeration_size(params: GridParams, d: usize) -> u128 {
    let m = params.m() as u128;
    sat_pow(m, d).saturating_mul(sat_pow(m - 1, d))
}

/// Streams every feasible class for `(k, d)` in lexicographic `(s, p)` order.
///
/// With `prune_by_a_k`, length vectors with `m1(s) >= A_k` are skipped before
/// any `p` is tried; nonempty classes always have `m1 < A_k`, so the output is
/// the same.
pub fn enumerate_feasible_classes(
    params: GridParams,
    d: usize,
    prune_by_a_k: bool,
    limit: u128,
) -> Result<impl Iterator<Item = BoxClass>> {
    if d == 0 {
        return Err(Error::Domain("dimension must be at least 1".into()));
    }
    check_guard("box classes", enumeration_size(params, d), limit)?;
    let m = params.m();
    let threshold = a_k(params);
    let lengths = Odometer::new(vec![0; d], vec![m - 1; d]);
    Ok(lengths
        .filter(move |s| {
            !prune_by_a_k || (s.iter().filter(|&&x| x < m - 1).count() as f64) < threshold
        })
        .flat_map(move |s| {
            // p_l ranges over 1..=2^k - s_l; all other p fail the fit condition
            let hi: Vec<u64> = s.iter().map(|&x| (m - x).min(m - 1)).collect();
            let ps: Box<dyn Iterator<Item = Vec<u64>>> = if s.contains(&0) {
                Box::new(std::iter::empty())
            } else {
                Box::new(Odometer::new(vec![1; d], hi))
            };
            ps.map(move |p| BoxClass {
                params,
                p,
                s: s.clone(),
            })
        })
        .filter(class_is_feasible))
}

/// Collects the feasible classes into a vector.
pub fn feasible_classes(params: GridParams, d: usize, limit: u128) -> Result<Vec<BoxClass>> {
    Ok(enumerate_feasible_classes(params, d, true, limit)?.collect())
}

/// One row of the class-count audit.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct CountAudit {
    pub k: u32,
    pub d: usize,
    pub exact_feasible_count: u128,
    /// Sum of `prod (2^k - s_l)` over `s` with at least one feasible class.
    pub sum_paper_p_count: u128,
    pub ln_pair_count_bound: f64,
    /// Length vectors whose feasible `p` count differs from `prod (2^k - s_l)`.
    pub mismatched_s: u64,
}

pub fn count_audit(params: GridParams, d: usize, limit: u128) -> Result<CountAudit> {
    let mut exact: u128 = 0;
    let mut product: u128 = 0;
    let mut mismatched = 0u64;
    let mut current: Option<(Vec<u64>, u128)> = None;
    let flush = |entry: Option<(Vec<u64>, u128)>, product: &mut u128, mismatched: &mut u64| {
        if let Some((s, count)) = entry {
            let expected: u128 = product_p_count(&s, params).try_into().unwrap_or(u128::MAX);
            *product = product.saturating_add(expected);
            if expected != count {
                *mismatched += 1;
            }
        }
    };
    for c in enumerate_feasible_classes(params, d, false, limit)? {
        exact += 1;
        match &mut current {
            Some((s, count)) if *s == c.s => *count += 1,
            _ => {
                flush(current.take(), &mut product, &mut mismatched);
                current = Some((c.s.clone(), 1));
            }
        }
    }
    flush(current.take(), &mut product, &mut mismatched);
    Ok(CountAudit {
        k: params.k(),
        d,
        exact_feasible_count: exact,
        sum_paper_p_count: product,
        ln_pair_count_bound: ln_pair_count_bound(params, d),
        mismatched_s: mismatched,
    })
}

/// Mixed-radix counter over `lo[i]..=hi[i]`, last axis fastest.
pub(crate) struct Odometer {
    cur: Vec<u64>,
    lo: Vec<u64>,
    hi: Vec<u64>,
    done: bool,
}

impl Odometer {
    pub(crate) fn new(lo: Vec<u64>, hi: Vec<u64>) -> Self {
        let done = lo.iter().zip(&hi).any(|(l, h)| l > h);
        Odometer {
            cur: lo.clone(),
            lo,
            hi,
            done,
        }
    }
}

impl Iterator for Odometer {
    type Item = Vec<u64>;

    fn next(&mut self) -> Option<Vec<u64>> {
        if self.done {
            return None;
        }
        let out = self.cur.clone();
        let mut axis = self.cur.len();
        loop {
            if axis == 0 {
                self.done = true;
                break;
            }
            axis -= 1;
            if self.cur[axis] < self.hi[axis] {
                self.cur[axis] += 1;
                break;
            }
            self.cur[axis] = self.lo[axis];
        }
        Some(out)
    }
}
