//! The dyadic grid `M_k = {1/2^k, ..., (2^k - 1)/2^k}` and point sets on it.
//!
//! Grid coordinates are stored as integer numerators over `2^k`, so every
//! containment and volume comparison downstream is an exact integer comparison.

use std::collections::HashSet;
use std::fmt;

use crate::error::{Error, Result};

/// Largest supported resolution exponent; numerators must fit in a `u64`.
pub const MAX_K: u32 = 62;

/// Default cap on the number of elements any enumeration may materialize.
pub const DEFAULT_ENUM_LIMIT: u128 = 100_000_000;

/// Environment variable that overrides [`DEFAULT_ENUM_LIMIT`] for the CLI.
pub const ENUM_LIMIT_ENV: &str = "DISPGRID_ENUM_LIMIT";

pub(crate) fn check_guard(what: &'static str, count: u128, limit: u128) -> Result<()> {
    if count > limit {
        Err(Error::GuardExceeded { what, count, limit })
    } else {
        Ok(())
    }
}

/// Saturating `base^exp` in `u128`, for guard arithmetic.
pub(crate) fn sat_pow(base: u128, exp: usize) -> u128 {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.saturating_mul(base);
    }
    acc
}

/// Grid resolution: `k` and the derived denominator `m = 2^k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridParams {
    k: u32,
}

impl GridParams {
    pub fn new(k: u32) -> Result<Self> {
        if !(2..=MAX_K).contains(&k) {
            return Err(Error::Domain(format!(
                "resolution k must lie in 2..={MAX_K}, got {k}"
            )));
        }
        Ok(GridParams { k })
    }

    #[inline]
    pub fn k(self) -> u32 {
        self.k
    }

    /// `2^k`.
    #[inline]
    pub fn m(self) -> u64 {
        1u64 << self.k
    }

    /// Number of grid values, `2^k - 1`.
    #[inline]
    pub fn size(self) -> u64 {
        self.m() - 1
    }

    pub fn is_valid_numerator(self, a: u64) -> bool {
        a >= 1 && a < self.m()
    }
}

impl fmt::Display for GridParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "k={}", self.k)
    }
}

/// A grid value `a / 2^k` with `1 <= a <= 2^k - 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridCoord {
    numerator: u64,
    k: u32,
}

impl GridCoord {
    pub fn new(params: GridParams, numerator: u64) -> Result<Self> {
        if !params.is_valid_numerator(numerator) {
            return Err(Error::Domain(format!(
                "grid numerator {numerator} outside 1..={} for {params}",
                params.size()
            )));
        }
        Ok(GridCoord {
            numerator,
            k: params.k,
        })
    }

    pub fn numerator(self) -> u64 {
        self.numerator
    }

    pub fn value(self) -> f64 {
        self.numerator as f64 / (1u64 << self.k) as f64
    }
}

impl fmt::Display for GridCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/2^{}", self.numerator, self.k)
    }
}

/// Half-open interval `[lo, hi)` of epsilon values sharing one resolution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpsilonRange {
    pub lo: f64,
    pub hi: f64,
}

impl EpsilonRange {
    pub fn contains(&self, eps: f64) -> bool {
        self.lo <= eps && eps < self.hi
    }
}

/// The `k` with `2^-k <= eps < 2^(-k+1)`, i.e. `ceil(log2(1/eps))`.
///
/// Compares against exact powers of two rather than taking logarithms, so
/// `eps = 2^-k` maps to `k` and not `k + 1`.
pub fn k_from_epsilon(eps: f64) -> Result<GridParams> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::Domain(format!(
            "epsilon must lie in (0, 1/2), got {eps}"
        )));
    }
    let mut k = 2u32;
    // 2^-k is exact in f64 for every k we can reach here.
    while eps < pow2_neg(k) {
        k += 1;
        if k > MAX_K {
            return Err(Error::Domain(format!(
                "epsilon {eps} needs a resolution finer than k={MAX_K}"
            )));
        }
    }
    GridParams::new(k)
}

pub fn epsilon_range(params: GridParams) -> EpsilonRange {
    EpsilonRange {
        lo: pow2_neg(params.k),
        hi: pow2_neg(params.k - 1),
    }
}

pub(crate) fn pow2_neg(k: u32) -> f64 {
    (-(k as f64)).exp2()
}

/// All of `M_k` in increasing order.
pub fn grid_values(params: GridParams, limit: u128) -> Result<Vec<GridCoord>> {
    check_guard("grid values", params.size() as u128, limit)?;
    Ok((1..params.m())
        .map(|numerator| GridCoord {
            numerator,
            k: params.k,
        })
        .collect())
}

/// Points whose coordinates are numerators over a shared `2^k`.
///
/// Multiset semantics: duplicate points are kept.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridPointSet {
    params: GridParams,
    dim: usize,
    coords: Vec<u64>,
}

impl GridPointSet {
    pub fn empty(params: GridParams, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(GridPointSet {
            params,
            dim,
            coords: Vec::new(),
        })
    }

    /// Builds a set from a flat row-major numerator buffer.
    pub fn from_flat(params: GridParams, dim: usize, coords: Vec<u64>) -> Result<Self> {
        check_dim(dim)?;
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: coords.len() % dim,
            });
        }
        if let Some(&bad) = coords.iter().find(|&&a| !params.is_valid_numerator(a)) {
            return Err(Error::Domain(format!(
                "grid numerator {bad} outside 1..={} for {params}",
                params.size()
            )));
        }
        Ok(GridPointSet {
            params,
            dim,
            coords,
        })
    }

    pub fn from_points<I, P>(params: GridParams, dim: usize, points: I) -> Result<Self>
    where
        I: IntoIterator<Item = P>,
        P: AsRef<[u64]>,
    {
        let mut set = Self::empty(params, dim)?;
        for p in points {
            set.push(p.as_ref())?;
        }
        Ok(set)
    }

    pub fn push(&mut self, point: &[u64]) -> Result<()> {
        if point.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: point.len(),
            });
        }
        if let Some(&bad) = point.iter().find(|&&a| !self.params.is_valid_numerator(a)) {
            return Err(Error::Domain(format!(
                "grid numerator {bad} outside 1..={} for {}",
                self.params.size(),
                self.params
            )));
        }
        self.coords.extend_from_slice(point);
        Ok(())
    }

    pub fn params(&self) -> GridParams {
        self.params
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[u64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, u64> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[u64] {
        &self.coords
    }

    pub fn distinct_count(&self) -> usize {
        self.iter().collect::<HashSet<_>>().len()
    }

    /// Only the first `n` points, in sampling order.
    pub fn prefix(&self, n: usize) -> GridPointSet {
        let n = n.min(self.len());
        GridPointSet {
            params: self.params,
            dim: self.dim,
            coords: self.coords[..n * self.dim].to_vec(),
        }
    }
}

/// Points with arbitrary coordinates in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RealPointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl RealPointSet {
    pub fn empty(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(RealPointSet {
            dim,
            coords: Vec::new(),
        })
    }

    pub fn from_points<I, P>(dim: usize, points: I) -> Result<Self>
    where
        I: IntoIterator<Item = P>,
        P: AsRef<[f64]>,
    {
        let mut set = Self::empty(dim)?;
        for p in points {
            set.push(p.as_ref())?;
        }
        Ok(set)
    }

    pub fn push(&mut self, point: &[f64]) -> Result<()> {
        if point.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: point.len(),
            });
        }
        if let Some(&bad) = point.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::Domain(format!("coordinate {bad} outside [0, 1]")));
        }
        // normalizes -0.0
        self.coords.extend(point.iter().map(|x| x + 0.0));
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords_flat(&self) -> &[f64] {
        &self.coords
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn distinct_count(&self) -> usize {
        self.iter()
            .map(|p| p.iter().map(|x| x.to_bits()).collect::<Vec<_>>())
            .collect::<HashSet<_>>()
            .len()
    }
}

/// A point set in `[0,1]^d`, either grid-valued or real-valued.
#[derive(Clone, Debug, PartialEq)]
pub enum PointSet {
    Grid(GridPointSet),
    Real(RealPointSet),
}

impl PointSet {
    pub fn dim(&self) -> usize {
        match self {
            PointSet::Grid(g) => g.dim(),
            PointSet::Real(r) => r.dim(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            PointSet::Grid(g) => g.len(),
            PointSet::Real(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn distinct_count(&self) -> usize {
        match self {
            PointSet::Grid(g) => g.distinct_count(),
            PointSet::Real(r) => r.distinct_count(),
        }
    }

    pub fn repr_name(&self) -> &'static str {
        match self {
            PointSet::Grid(_) => "grid",
            PointSet::Real(_) => "real",
        }
    }
}

impl From<GridPointSet> for PointSet {
    fn from(g: GridPointSet) -> Self {
        PointSet::Grid(g)
    }
}

impl From<RealPointSet> for PointSet {
    fn from(r: RealPointSet) -> Self {
        PointSet::Real(r)
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        Err(Error::Domain("dimension must be at least 1".into()))
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_from_epsilon_examples() {
        assert_eq!(k_from_epsilon(0.25).unwrap().k(), 2);
        assert_eq!(k_from_epsilon(0.3).unwrap().k(), 2);
        assert_eq!(k_from_epsilon(0.1).unwrap().k(), 4);
        // exact dyadic boundaries stay on their own k
        assert_eq!(k_from_epsilon(0.125).unwrap().k(), 3);
        assert_eq!(k_from_epsilon(1.0 / 1024.0).unwrap().k(), 10);
        assert_eq!(k_from_epsilon(0.249_999_999).unwrap().k(), 3);
    }

    #[test]
    fn k_from_epsilon_rejects_out_of_range() {
        for eps in [0.0, -0.1, 0.5, 0.7, f64::NAN, 1e-30] {
            assert!(k_from_epsilon(eps).is_err(), "eps={eps}");
        }
    }

    #[test]
    fn epsilon_range_examples() {
        let r = |k| epsilon_range(GridParams::new(k).unwrap());
        assert_eq!(r(2), EpsilonRange { lo: 0.25, hi: 0.5 });
        assert_eq!(
            r(3),
            EpsilonRange {
                lo: 0.125,
                hi: 0.25
            }
        );
        assert_eq!(
            r(4),
            EpsilonRange {
                lo: 0.0625,
                hi: 0.125
            }
        );
    }

    #[test]
    fn grid_values_examples() {
        let g2 = grid_values(GridParams::new(2).unwrap(), DEFAULT_ENUM_LIMIT).unwrap();
        let vals: Vec<f64> = g2.iter().map(|c| c.value()).collect();
        assert_eq!(vals, vec![0.25, 0.5, 0.75]);
        let g3 = grid_values(GridParams::new(3).unwrap(), DEFAULT_ENUM_LIMIT).unwrap();
        assert_eq!(g3.len(), 7);
        assert_eq!(g3[0].value(), 0.125);
        assert_eq!(g3[6].value(), 0.875);
    }

    #[test]
    fn grid_values_guard() {
        let p = GridParams::new(30).unwrap();
        assert!(matches!(
            grid_values(p, DEFAULT_ENUM_LIMIT),
            Err(Error::GuardExceeded { .. })
        ));
    }

    #[test]
    fn grid_params_bounds() {
        assert!(GridParams::new(1).is_err());
        assert!(GridParams::new(MAX_K + 1).is_err());
        assert_eq!(GridParams::new(5).unwrap().m(), 32);
    }

    #[test]
    fn point_set_validation_and_distinct_count() {
        let p = GridParams::new(2).unwrap();
        let mut s = GridPointSet::empty(p, 2).unwrap();
        s.push(&[1, 2]).unwrap();
        s.push(&[1, 2]).unwrap();
        s.push(&[3, 3]).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.distinct_count(), 2);
        assert!(s.push(&[4, 1]).is_err());
        assert!(s.push(&[0, 1]).is_err());
        assert!(s.push(&[1]).is_err());

        let mut r = RealPointSet::empty(1).unwrap();
        r.push(&[0.0]).unwrap();
        r.push(&[1.0]).unwrap();
        assert!(r.push(&[1.2]).is_err());
        assert!(r.push(&[f64::NAN]).is_err());
        assert!(GridPointSet::empty(p, 0).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn epsilon_round_trip(eps in 1e-12f64..0.5) {
                let k = k_from_epsilon(eps).unwrap();
                prop_assert!(epsilon_range(k).contains(eps));
            }
        }

        #[test]
        fn k_non_increasing_in_eps() {
            let mut prev = u32::MAX;
            let mut eps = 0.4999;
            while eps > 1e-9 {
                let k = k_from_epsilon(eps).unwrap().k();
                assert!(k >= prev || prev == u32::MAX);
                prev = k;
                eps *= 0.93;
            }
        }

        #[test]
        fn grid_values_uniform_gap() {
            for k in 2..=10 {
                let p = GridParams::new(k).unwrap();
                let vals = grid_values(p, DEFAULT_ENUM_LIMIT).unwrap();
                assert_eq!(vals.len() as u64, p.m() - 1);
                for w in vals.windows(2) {
                    assert_eq!(w[1].numerator() - w[0].numerator(), 1);
                }
                assert!(vals.iter().all(|v| v.value() > 0.0 && v.value() < 1.0));
            }
        }
    }
}
