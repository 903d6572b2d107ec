//! Exact dispersion via exhaustive largest-empty-box search.
//!
//! The supremum over all axis-parallel boxes avoiding a finite point set is
//! attained by a box whose every face either lies on the boundary of the unit
//! cube or passes through a point coordinate. We enumerate exactly those
//! candidate boxes. Faces through a point coordinate are open, faces on the
//! cube boundary are closed, so the maximizer is a concrete empty box.
//!
//! Ties between equal-volume witnesses are broken towards the smallest
//! endpoint vector `(lo_1, hi_1, lo_2, hi_2, ...)`, which keeps serial, parallel
//! and pruned searches bit-identical.

use std::cmp::Ordering;
use std::fmt;

use rayon::prelude::*;

use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::grid::{check_guard, GridPointSet, PointSet, RealPointSet, DEFAULT_ENUM_LIMIT, MAX_K};

/// Box endpoints, either exact numerators over `2^exp` or plain reals.
#[derive(Clone, Debug, PartialEq)]
pub enum Endpoints {
    Dyadic {
        exp: u32,
        lo: Vec<u64>,
        hi: Vec<u64>,
    },
    Real {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
}

/// An axis-parallel box in `[0,1]^d` with per-endpoint openness.
#[derive(Clone, Debug, PartialEq)]
pub struct DyadicBox {
    ends: Endpoints,
    lo_open: Vec<bool>,
    hi_open: Vec<bool>,
}

impl DyadicBox {
    pub fn dyadic(
        exp: u32,
        lo: Vec<u64>,
        hi: Vec<u64>,
        lo_open: Vec<bool>,
        hi_open: Vec<bool>,
    ) -> Result<Self> {
        if exp > MAX_K {
            return Err(Error::Domain(format!("box denominator 2^{exp} too fine")));
        }
        check_lens(lo.len(), hi.len(), lo_open.len(), hi_open.len())?;
        let top = 1u64 << exp;
        for (l, h) in lo.iter().zip(&hi) {
            if !(l < h && *h <= top) {
                return Err(Error::Domain(format!(
                    "invalid side [{l}/2^{exp}, {h}/2^{exp}]"
                )));
            }
        }
        Ok(DyadicBox {
            ends: Endpoints::Dyadic { exp, lo, hi },
            lo_open,
            hi_open,
        })
    }

    /// Dyadic box that is open on every face.
    pub fn dyadic_open(exp: u32, lo: Vec<u64>, hi: Vec<u64>) -> Result<Self> {
        let d = lo.len();
        Self::dyadic(exp, lo, hi, vec![true; d], vec![true; d])
    }

    /// Dyadic box that is closed on every face.
    pub fn dyadic_closed(exp: u32, lo: Vec<u64>, hi: Vec<u64>) -> Result<Self> {
        let d = lo.len();
        Self::dyadic(exp, lo, hi, vec![false; d], vec![false; d])
    }

    pub fn real(
        lo: Vec<f64>,
        hi: Vec<f64>,
        lo_open: Vec<bool>,
        hi_open: Vec<bool>,
    ) -> Result<Self> {
        check_lens(lo.len(), hi.len(), lo_open.len(), hi_open.len())?;
        for (l, h) in lo.iter().zip(&hi) {
            if !(0.0 <= *l && l < h && *h <= 1.0) {
                return Err(Error::Domain(format!("invalid side [{l}, {h}]")));
            }
        }
        Ok(DyadicBox {
            ends: Endpoints::Real { lo, hi },
            lo_open,
            hi_open,
        })
    }

    /// The whole closed cube `[0,1]^d`.
    pub fn unit_cube(dim: usize) -> Self {
        DyadicBox {
            ends: Endpoints::Dyadic {
                exp: 0,
                lo: vec![0; dim],
                hi: vec![1; dim],
            },
            lo_open: vec![false; dim],
            hi_open: vec![false; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo_open.len()
    }

    pub fn endpoints(&self) -> &Endpoints {
        &self.ends
    }

    pub fn lower_open(&self, axis: usize) -> bool {
        self.lo_open[axis]
    }

    pub fn upper_open(&self, axis: usize) -> bool {
        self.hi_open[axis]
    }

    /// Infimum of side `axis`.
    pub fn lower(&self, axis: usize) -> Scalar {
        match &self.ends {
            Endpoints::Dyadic { exp, lo, .. } => Scalar::Dyadic(lo[axis], *exp),
            Endpoints::Real { lo, .. } => Scalar::Real(lo[axis]),
        }
    }

    /// Supremum of side `axis`.
    pub fn upper(&self, axis: usize) -> Scalar {
        match &self.ends {
            Endpoints::Dyadic { exp, hi, .. } => Scalar::Dyadic(hi[axis], *exp),
            Endpoints::Real { hi, .. } => Scalar::Real(hi[axis]),
        }
    }

    /// Lebesgue volume; openness does not matter.
    pub fn volume(&self) -> Volume {
        match &self.ends {
            Endpoints::Dyadic { exp, lo, hi } => Volume::Exact(
                lo.iter()
                    .zip(hi)
                    .fold(Dyadic::one(), |v, (l, h)| v.mul_frac(h - l, *exp as u64)),
            ),
            Endpoints::Real { lo, hi } => {
                Volume::Real(lo.iter().zip(hi).map(|(l, h)| h - l).product())
            }
        }
    }

    pub fn contains(&self, pt: PointRef<'_>) -> Result<bool> {
        if pt.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: pt.dim(),
            });
        }
        Ok((0..self.dim()).all(|axis| {
            let x = pt.coord(axis);
            let lo_ok = match self.lower(axis).cmp_exact(&x) {
                Ordering::Less => true,
                Ordering::Equal => !self.lo_open[axis],
                Ordering::Greater => false,
            };
            let hi_ok = match x.cmp_exact(&self.upper(axis)) {
                Ordering::Less => true,
                Ordering::Equal => !self.hi_open[axis],
                Ordering::Greater => false,
            };
            lo_ok && hi_ok
        }))
    }
}

fn check_lens(a: usize, b: usize, c: usize, d: usize) -> Result<()> {
    if a == 0 {
        return Err(Error::Domain("box dimension must be at least 1".into()));
    }
    for n in [b, c, d] {
        if n != a {
            return Err(Error::DimensionMismatch {
                expected: a,
                found: n,
            });
        }
    }
    Ok(())
}

impl fmt::Display for DyadicBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for axis in 0..self.dim() {
            if axis > 0 {
                write!(f, " x ")?;
            }
            let open = if self.lo_open[axis] { '(' } else { '[' };
            let close = if self.hi_open[axis] { ')' } else { ']' };
            write!(f, "{open}{},{}{close}", self.lower(axis), self.upper(axis))?;
        }
        Ok(())
    }
}

/// A single coordinate value, exact dyadic or real.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Scalar {
    /// `numerator / 2^exp`.
    Dyadic(u64, u32),
    Real(f64),
}

impl Scalar {
    pub fn to_f64(self) -> f64 {
        match self {
            Scalar::Dyadic(a, e) => a as f64 / (e as f64).exp2(),
            Scalar::Real(x) => x,
        }
    }

    /// Exact comparison; reals are compared through their exact dyadic value.
    pub fn cmp_exact(&self, other: &Scalar) -> Ordering {
        match (*self, *other) {
            (Scalar::Dyadic(a, ea), Scalar::Dyadic(b, eb)) => {
                let e = ea.max(eb);
                ((a as u128) << (e - ea)).cmp(&((b as u128) << (e - eb)))
            }
            (Scalar::Real(x), Scalar::Real(y)) => x.total_cmp(&y),
            (x, y) => x.as_dyadic().cmp(&y.as_dyadic()),
        }
    }

    fn as_dyadic(self) -> Dyadic {
        match self {
            Scalar::Dyadic(a, e) => Dyadic::new(a, e as u64),
            Scalar::Real(x) => Dyadic::from_f64(x).unwrap_or_else(Dyadic::zero),
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Dyadic(a, e) => write!(f, "{a}/2^{e}"),
            Scalar::Real(x) => write!(f, "{x}"),
        }
    }
}

/// Borrowed view of a single point.
#[derive(Clone, Copy, Debug)]
pub enum PointRef<'a> {
    Grid { k: u32, coords: &'a [u64] },
    Real(&'a [f64]),
}

impl PointRef<'_> {
    pub fn dim(&self) -> usize {
        match self {
            PointRef::Grid { coords, .. } => coords.len(),
            PointRef::Real(c) => c.len(),
        }
    }

    pub fn coord(&self, axis: usize) -> Scalar {
        match self {
            PointRef::Grid { k, coords } => Scalar::Dyadic(coords[axis], *k),
            PointRef::Real(c) => Scalar::Real(c[axis]),
        }
    }
}

/// A box volume: exact for grid inputs, `f64` for real inputs.
#[derive(Clone, Debug)]
pub enum Volume {
    Exact(Dyadic),
    Real(f64),
}

impl Volume {
    pub fn to_f64(&self) -> f64 {
        match self {
            Volume::Exact(d) => d.to_f64(),
            Volume::Real(x) => *x,
        }
    }

    /// `2^-k` as an exact volume.
    pub fn pow2_neg(k: u32) -> Volume {
        Volume::Exact(Dyadic::pow2_neg(k as u64))
    }

    fn as_dyadic(&self) -> Option<Dyadic> {
        match self {
            Volume::Exact(d) => Some(d.clone()),
            Volume::Real(x) => Dyadic::from_f64(*x),
        }
    }
}

impl PartialEq for Volume {
    fn eq(&self, other: &Self) -> bool {
        self.partial_cmp(other) == Some(Ordering::Equal)
    }
}

impl PartialOrd for Volume {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Volume::Exact(a), Volume::Exact(b)) => Some(a.cmp(b)),
            (Volume::Real(a), Volume::Real(b)) => a.partial_cmp(b),
            (a, b) => Some(a.as_dyadic()?.cmp(&b.as_dyadic()?)),
        }
    }
}

impl fmt::Display for Volume {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Volume::Exact(d) => write!(f, "{d}"),
            Volume::Real(x) => write!(f, "{x}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DispersionResult {
    pub volume: Volume,
    pub witness: DyadicBox,
}

#[derive(Clone, Copy, Debug)]
pub struct SearchOptions {
    /// Maximum number of candidate boxes.
    pub limit: u128,
    /// Skip boxes that are dominated by an extension or cannot beat the
    /// incumbent. Volumes and witnesses are identical to the exhaustive scan.
    pub prune: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            limit: DEFAULT_ENUM_LIMIT,
            prune: false,
        }
    }
}

pub fn box_contains(b: &DyadicBox, pt: PointRef<'_>) -> Result<bool> {
    b.contains(pt)
}

pub fn box_volume(b: &DyadicBox) -> Volume {
    b.volume()
}

/// Number of candidate boxes the exhaustive search would scan.
pub fn candidate_box_count(points: &PointSet) -> u128 {
    match points {
        PointSet::Grid(g) => grid_search(g, false).count(),
        PointSet::Real(r) => real_search(r, false).count(),
    }
}

pub fn largest_empty_box(points: &PointSet) -> Result<DispersionResult> {
    largest_empty_box_with(points, SearchOptions::default())
}

pub fn largest_empty_box_with(points: &PointSet, opts: SearchOptions) -> Result<DispersionResult> {
    match points {
        PointSet::Grid(g) => {
            let search = grid_search(g, opts.prune);
            check_guard("candidate boxes", search.count(), opts.limit)?;
            let best = search.maximize();
            let k = g.params().k();
            Ok(DispersionResult {
                volume: Volume::Exact(best.volume.clone()),
                witness: search.witness_grid(&best.lo, &best.hi, k),
            })
        }
        PointSet::Real(r) => {
            let search = real_search(r, opts.prune);
            check_guard("candidate boxes", search.count(), opts.limit)?;
            let best = search.maximize();
            Ok(DispersionResult {
                volume: Volume::Real(best.volume),
                witness: search.witness_real(&best.lo, &best.hi),
            })
        }
    }
}

/// Decision form: is there an empty box with volume strictly above `threshold`?
///
/// Stops at the first witness found.
pub fn has_empty_box_above(points: &PointSet, threshold: &Volume) -> Result<Option<DyadicBox>> {
    has_empty_box_above_with(points, threshold, DEFAULT_ENUM_LIMIT)
}

pub fn has_empty_box_above_with(
    points: &PointSet,
    threshold: &Volume,
    limit: u128,
) -> Result<Option<DyadicBox>> {
    match points {
        PointSet::Grid(g) => {
            let search = grid_search(g, true);
            check_guard("candidate boxes", search.count(), limit)?;
            let t = threshold
                .as_dyadic()
                .ok_or_else(|| Error::Domain(format!("invalid threshold {threshold}")))?;
            Ok(search
                .find_above(&t)
                .map(|(lo, hi)| search.witness_grid(&lo, &hi, g.params().k())))
        }
        PointSet::Real(r) => {
            let search = real_search(r, true);
            check_guard("candidate boxes", search.count(), limit)?;
            let t = threshold.to_f64();
            Ok(search
                .find_above(&t)
                .map(|(lo, hi)| search.witness_real(&lo, &hi)))
        }
    }
}

trait Measure: Sync {
    type C: Copy + PartialOrd + Send + Sync;
    type V: Clone + PartialOrd + Send + Sync;
    fn unit(&self) -> Self::V;
    fn extend(&self, v: &Self::V, lo: Self::C, hi: Self::C) -> Self::V;
}

struct GridMeasure {
    k: u64,
}

impl Measure for GridMeasure {
    type C = u64;
    type V = Dyadic;

    fn unit(&self) -> Dyadic {
        Dyadic::one()
    }

    fn extend(&self, v: &Dyadic, lo: u64, hi: u64) -> Dyadic {
        v.mul_frac(hi - lo, self.k)
    }
}

struct RealMeasure;

impl Measure for RealMeasure {
    type C = f64;
    type V = f64;

    fn unit(&self) -> f64 {
        1.0
    }

    fn extend(&self, v: &f64, lo: f64, hi: f64) -> f64 {
        v * (hi - lo)
    }
}

/// Winning box as per-axis indices into the candidate lists.
struct Best<V> {
    volume: V,
    lo: Vec<usize>,
    hi: Vec<usize>,
}

impl<V: PartialOrd> Best<V> {
    fn key(&self) -> impl Iterator<Item = usize> + '_ {
        self.lo.iter().zip(&self.hi).flat_map(|(l, h)| [*l, *h])
    }

    /// The preferred of two maxima: larger volume, then smaller endpoint vector.
    fn pick(a: Self, b: Self) -> Self {
        match a.volume.partial_cmp(&b.volume) {
            Some(Ordering::Greater) => a,
            Some(Ordering::Less) => b,
            _ => {
                if b.key().lt(a.key()) {
                    b
                } else {
                    a
                }
            }
        }
    }
}

struct Search<'a, M: Measure> {
    measure: M,
    dim: usize,
    points: &'a [M::C],
    /// Sorted distinct endpoints per axis: the cube boundary plus point coordinates.
    cands: Vec<Vec<M::C>>,
    /// Whether each candidate is a point coordinate (an open face).
    supported: Vec<Vec<bool>>,
    prune: bool,
}

fn grid_search(g: &GridPointSet, prune: bool) -> Search<'_, GridMeasure> {
    let dim = g.dim();
    let top = g.params().m();
    let mut cands = Vec::with_capacity(dim);
    let mut supported = Vec::with_capacity(dim);
    for axis in 0..dim {
        let mut coords: Vec<u64> = g.iter().map(|p| p[axis]).collect();
        coords.sort_unstable();
        coords.dedup();
        let mut c = Vec::with_capacity(coords.len() + 2);
        c.push(0);
        c.extend_from_slice(&coords);
        c.push(top);
        let mut s = vec![true; c.len()];
        s[0] = false;
        *s.last_mut().unwrap() = false;
        cands.push(c);
        supported.push(s);
    }
    Search {
        measure: GridMeasure {
            k: g.params().k() as u64,
        },
        dim,
        points: g.as_flat(),
        cands,
        supported,
        prune,
    }
}

fn real_search(r: &RealPointSet, prune: bool) -> Search<'_, RealMeasure> {
    let dim = r.dim();
    let mut cands = Vec::with_capacity(dim);
    let mut supported = Vec::with_capacity(dim);
    for axis in 0..dim {
        let mut coords: Vec<f64> = r.iter().map(|p| p[axis]).collect();
        coords.sort_by(f64::total_cmp);
        coords.dedup_by(|a, b| a == b);
        let mut c = coords.clone();
        if c.first() != Some(&0.0) {
            c.insert(0, 0.0);
        }
        if c.last() != Some(&1.0) {
            c.push(1.0);
        }
        let s = c.iter().map(|x| coords.contains(x)).collect();
        cands.push(c);
        supported.push(s);
    }
    Search {
        measure: RealMeasure,
        dim,
        points: r.coords_flat(),
        cands,
        supported,
        prune,
    }
}

impl<M: Measure> Search<'_, M> {
    fn count(&self) -> u128 {
        self.cands.iter().fold(1u128, |acc, c| {
            let n = c.len() as u128;
            acc.saturating_mul(n * (n - 1) / 2)
        })
    }

    fn coord(&self, point: usize, axis: usize) -> M::C {
        self.points[point * self.dim + axis]
    }

    fn n_points(&self) -> usize {
        self.points.len() / self.dim
    }

    fn maximize(&self) -> Best<M::V> {
        let all: Vec<usize> = (0..self.n_points()).collect();
        let unit = self.measure.unit();
        if self.prune && all.is_empty() {
            let (lo, hi) = self.full_from(0, &[], &[]);
            return Best {
                volume: unit,
                lo,
                hi,
            };
        }
        let n0 = self.cands[0].len();
        let pairs: Vec<(usize, usize)> = (0..n0)
            .flat_map(|l| (l + 1..n0).map(move |h| (l, h)))
            .collect();
        pairs
            .par_iter()
            .filter_map(|&(l, h)| {
                let (cl, ch) = (self.cands[0][l], self.cands[0][h]);
                let alive: Vec<usize> = all
                    .iter()
                    .copied()
                    .filter(|&i| {
                        let x = self.coord(i, 0);
                        cl < x && x < ch
                    })
                    .collect();
                let vol = self.measure.extend(&unit, cl, ch);
                let mut best = None;
                let mut lo = vec![l];
                let mut hi = vec![h];
                self.descend(1, &alive, vol, &mut lo, &mut hi, &mut best);
                best
            })
            .reduce_with(Best::pick)
            .expect("at least one candidate box per axis")
    }

    fn full_from(&self, axis: usize, lo: &[usize], hi: &[usize]) -> (Vec<usize>, Vec<usize>) {
        let mut lo = lo.to_vec();
        let mut hi = hi.to_vec();
        for a in axis..self.dim {
            lo.push(0);
            hi.push(self.cands[a].len() - 1);
        }
        (lo, hi)
    }

    fn consider(&self, best: &mut Option<Best<M::V>>, volume: M::V, lo: &[usize], hi: &[usize]) {
        let better = match best {
            None => true,
            Some(b) => volume > b.volume,
        };
        if better {
            *best = Some(Best {
                volume,
                lo: lo.to_vec(),
                hi: hi.to_vec(),
            });
        }
    }

    fn descend(
        &self,
        axis: usize,
        alive: &[usize],
        vol: M::V,
        lo: &mut Vec<usize>,
        hi: &mut Vec<usize>,
        best: &mut Option<Best<M::V>>,
    ) {
        if axis == self.dim {
            if alive.is_empty() {
                self.consider(best, vol, lo, hi);
            }
            return;
        }
        if self.prune && alive.is_empty() {
            // Full extent on the remaining axes strictly dominates every other choice.
            let (l, h) = self.full_from(axis, lo, hi);
            self.consider(best, vol, &l, &h);
            return;
        }
        let cands = &self.cands[axis];
        for li in 0..cands.len() {
            let cl = cands[li];
            let above: Vec<usize> = alive
                .iter()
                .copied()
                .filter(|&i| cl < self.coord(i, axis))
                .collect();
            for (hi_idx, &ch) in cands.iter().enumerate().skip(li + 1) {
                let v = self.measure.extend(&vol, cl, ch);
                if self.prune {
                    if let Some(b) = best {
                        if v < b.volume {
                            continue;
                        }
                    }
                }
                let inside: Vec<usize> = above
                    .iter()
                    .copied()
                    .filter(|&i| self.coord(i, axis) < ch)
                    .collect();
                lo.push(li);
                hi.push(hi_idx);
                self.descend(axis + 1, &inside, v, lo, hi, best);
                lo.pop();
                hi.pop();
            }
        }
    }

    /// First empty candidate box (in endpoint-vector order) with volume > `threshold`.
    fn find_above(&self, threshold: &M::V) -> Option<(Vec<usize>, Vec<usize>)> {
        let all: Vec<usize> = (0..self.n_points()).collect();
        let mut lo = Vec::with_capacity(self.dim);
        let mut hi = Vec::with_capacity(self.dim);
        self.find_from(0, &all, self.measure.unit(), threshold, &mut lo, &mut hi)
    }

    fn find_from(
        &self,
        axis: usize,
        alive: &[usize],
        vol: M::V,
        threshold: &M::V,
        lo: &mut Vec<usize>,
        hi: &mut Vec<usize>,
    ) -> Option<(Vec<usize>, Vec<usize>)> {
        // Remaining sides are at most 1, so `vol` bounds every completion.
        if vol <= *threshold {
            return None;
        }
        if alive.is_empty() {
            return Some(self.full_from(axis, lo, hi));
        }
        if axis == self.dim {
            return None;
        }
        let cands = &self.cands[axis];
        for li in 0..cands.len() {
            let cl = cands[li];
            let above: Vec<usize> = alive
                .iter()
                .copied()
                .filter(|&i| cl < self.coord(i, axis))
                .collect();
            for (hi_idx, &ch) in cands.iter().enumerate().skip(li + 1) {
                let v = self.measure.extend(&vol, cl, ch);
                if v <= *threshold {
                    continue;
                }
                let inside: Vec<usize> = above
                    .iter()
                    .copied()
                    .filter(|&i| self.coord(i, axis) < ch)
                    .collect();
                lo.push(li);
                hi.push(hi_idx);
                let found = self.find_from(axis + 1, &inside, v, threshold, lo, hi);
                lo.pop();
                hi.pop();
                if found.is_some() {
                    return found;
                }
            }
        }
        None
    }

    fn openness(&self, lo: &[usize], hi: &[usize]) -> (Vec<bool>, Vec<bool>) {
        let lo_open = lo
            .iter()
            .enumerate()
            .map(|(a, &i)| self.supported[a][i])
            .collect();
        let hi_open = hi
            .iter()
            .enumerate()
            .map(|(a, &i)| self.supported[a][i])
            .collect();
        (lo_open, hi_open)
    }
}

impl Search<'_, GridMeasure> {
    fn witness_grid(&self, lo: &[usize], hi: &[usize], k: u32) -> DyadicBox {
        let (lo_open, hi_open) = self.openness(lo, hi);
        DyadicBox {
            ends: Endpoints::Dyadic {
                exp: k,
                lo: lo
                    .iter()
                    .enumerate()
                    .map(|(a, &i)| self.cands[a][i])
                    .collect(),
                hi: hi
                    .iter()
                    .enumerate()
                    .map(|(a, &i)| self.cands[a][i])
                    .collect(),
            },
            lo_open,
            hi_open,
        }
    }
}

impl Search<'_, RealMeasure> {
    fn witness_real(&self, lo: &[usize], hi: &[usize]) -> DyadicBox {
        let (lo_open, hi_open) = self.openness(lo, hi);
        DyadicBox {
            ends: Endpoints::Real {
                lo: lo
                    .iter()
                    .enumerate()
                    .map(|(a, &i)| self.cands[a][i])
                    .collect(),
                hi: hi
                    .iter()
                    .enumerate()
                    .map(|(a, &i)| self.cands[a][i])
                    .collect(),
            },
            lo_open,
            hi_open,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridParams;

    fn k2() -> GridParams {
        GridParams::new(2).unwrap()
    }

    fn full_grid_k2_d2() -> PointSet {
        let pts: Vec<[u64; 2]> = (1..4).flat_map(|a| (1..4).map(move |b| [a, b])).collect();
        GridPointSet::from_points(k2(), 2, pts).unwrap().into()
    }

    #[test]
    fn contains_respects_openness() {
        let open = DyadicBox::dyadic_open(2, vec![1], vec![3]).unwrap();
        let closed = DyadicBox::dyadic_closed(2, vec![1], vec![3]).unwrap();
        let half = PointRef::Grid { k: 1, coords: &[1] };
        let quarter = PointRef::Grid { k: 2, coords: &[1] };
        assert!(box_contains(&open, half).unwrap());
        assert!(!box_contains(&open, quarter).unwrap());
        assert!(box_contains(&closed, quarter).unwrap());
        assert!(box_contains(&open, PointRef::Real(&[0.5])).unwrap());
        assert!(!box_contains(&open, PointRef::Real(&[0.25])).unwrap());
        assert!(matches!(
            box_contains(&open, PointRef::Real(&[0.5, 0.5])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn volume_examples() {
        let b = DyadicBox::dyadic_open(1, vec![0, 0], vec![1, 1]).unwrap();
        assert_eq!(box_volume(&b), Volume::pow2_neg(2));
        assert_eq!(
            box_volume(&DyadicBox::unit_cube(5)),
            Volume::Exact(Dyadic::one())
        );
        let b = DyadicBox::dyadic_open(2, vec![1, 0], vec![3, 4]).unwrap();
        assert_eq!(box_volume(&b), Volume::pow2_neg(1));
        let r = DyadicBox::real(
            vec![0.25, 0.0],
            vec![0.75, 1.0],
            vec![true; 2],
            vec![true; 2],
        )
        .unwrap();
        assert_eq!(box_volume(&r), Volume::Real(0.5));
    }

    #[test]
    fn invalid_boxes_rejected() {
        assert!(DyadicBox::dyadic_open(2, vec![2], vec![2]).is_err());
        assert!(DyadicBox::dyadic_open(2, vec![1], vec![5]).is_err());
        assert!(DyadicBox::real(vec![0.5], vec![1.5], vec![true], vec![true]).is_err());
    }

    #[test]
    fn empty_set_has_dispersion_one() {
        let p: PointSet = GridPointSet::empty(k2(), 2).unwrap().into();
        let r = largest_empty_box(&p).unwrap();
        assert_eq!(r.volume, Volume::Exact(Dyadic::one()));
        assert_eq!(r.witness.to_string(), "[0/2^2,4/2^2] x [0/2^2,4/2^2]");
    }

    #[test]
    fn single_midpoint_in_one_dimension() {
        let p: PointSet = GridPointSet::from_points(k2(), 1, [[2u64]]).unwrap().into();
        let r = largest_empty_box(&p).unwrap();
        assert_eq!(r.volume, Volume::pow2_neg(1));
        assert!(!r
            .witness
            .contains(PointRef::Grid { k: 2, coords: &[2] })
            .unwrap());
        assert_eq!(r.witness.to_string(), "[0/2^2,2/2^2)");

        let real: PointSet = RealPointSet::from_points(1, [[0.5]]).unwrap().into();
        assert_eq!(largest_empty_box(&real).unwrap().volume, Volume::Real(0.5));
    }

    #[test]
    fn full_grid_k2_d2_has_dispersion_quarter() {
        let r = largest_empty_box(&full_grid_k2_d2()).unwrap();
        assert_eq!(r.volume, Volume::pow2_neg(2));
        assert_eq!(r.witness.volume(), r.volume);
    }

    #[test]
    fn decision_form_examples() {
        let q = Volume::pow2_neg(2);
        assert!(has_empty_box_above(&full_grid_k2_d2(), &q)
            .unwrap()
            .is_none());

        let p: PointSet = GridPointSet::from_points(k2(), 1, [[2u64]]).unwrap().into();
        let w = has_empty_box_above(&p, &q).unwrap().expect("witness");
        assert!(w.volume() > q);

        let empty: PointSet = GridPointSet::empty(k2(), 2).unwrap().into();
        assert!(has_empty_box_above(&empty, &Volume::pow2_neg(1))
            .unwrap()
            .is_some());
        assert!(has_empty_box_above(&empty, &Volume::Real(1.0))
            .unwrap()
            .is_none());
    }

    #[test]
    fn points_on_the_boundary_open_the_face() {
        let p: PointSet = RealPointSet::from_points(1, [[0.0], [1.0]]).unwrap().into();
        let r = largest_empty_box(&p).unwrap();
        assert_eq!(r.volume, Volume::Real(1.0));
        assert_eq!(r.witness.to_string(), "(0,1)");
    }

    #[test]
    fn guard_refuses_large_searches() {
        let pts: Vec<[f64; 3]> = (0..60)
            .map(|i| {
                let t = (i as f64 + 0.5) / 60.0;
                [t, (t * 7.0).fract(), (t * 13.0).fract()]
            })
            .collect();
        let p: PointSet = RealPointSet::from_points(3, pts).unwrap().into();
        let opts = SearchOptions {
            limit: 1_000_000,
            prune: false,
        };
        assert!(matches!(
            largest_empty_box_with(&p, opts),
            Err(Error::GuardExceeded { .. })
        ));
    }
}
