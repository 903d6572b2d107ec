//! Closed-form sample-size and dispersion bounds.
//!
//! Every formula uses base-2 logarithms as written; natural logarithms only
//! appear in log-space failure-bound arithmetic elsewhere.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{k_from_epsilon, GridParams};
use crate::partition::a_k;

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 0.5 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "epsilon must lie in (0, 1/2), got {eps}"
        )))
    }
}

fn check_d(d: usize) -> Result<()> {
    if d >= 2 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "dimension must be at least 2, got {d}"
        )))
    }
}

/// `ceil(2^4 k 2^(2k) log2(2^(k+1) d))`: enough points for the union bound.
pub fn n_required(params: GridParams, d: usize) -> u64 {
    let k = params.k() as f64;
    let m = params.m() as f64;
    let log_term = k + 1.0 + (d.max(1) as f64).log2();
    (16.0 * k * m * m * log_term).ceil() as u64
}

/// `2^7 log2(d) (1 + log2(1/eps))^2 / eps^2`.
pub fn n_theorem1(eps: f64, d: usize) -> Result<f64> {
    check_eps(eps)?;
    check_d(d)?;
    Ok(n_theorem1_unchecked(eps, d as f64))
}

fn n_theorem1_unchecked(eps: f64, d: f64) -> f64 {
    let l = 1.0 + (1.0 / eps).log2();
    128.0 * d.log2() * l * l / (eps * eps)
}

/// `2^9 log2(d) (log2(1/eps) / eps)^2`.
pub fn n_abstract(eps: f64, d: usize) -> Result<f64> {
    check_eps(eps)?;
    check_d(d)?;
    let t = (1.0 / eps).log2() / eps;
    Ok(512.0 * (d as f64).log2() * t * t)
}

/// `2^6 d (1 + log2(1/eps)) / eps`, linear in the dimension.
pub fn n_rudolf(eps: f64, d: usize) -> Result<f64> {
    check_eps(eps)?;
    check_d(d)?;
    Ok(64.0 * d as f64 * (1.0 + (1.0 / eps).log2()) / eps)
}

/// The intermediate `2^6 (1 + log2(1/eps)) log2(4d/eps) / eps^2`.
pub fn n_intermediate(eps: f64, d: usize) -> Result<f64> {
    check_eps(eps)?;
    check_d(d)?;
    Ok(64.0 * (1.0 + (1.0 / eps).log2()) * (4.0 * d as f64 / eps).log2() / (eps * eps))
}

/// `log2(d) / (4 (n + log2(d)))`, a lower bound on the minimal dispersion.
pub fn lower_bound_ahr(n: u64, d: usize) -> Result<f64> {
    check_d(d)?;
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    let l = (d as f64).log2();
    Ok(l / (4.0 * (n as f64 + l)))
}

/// Relative precision of [`disp_upper_from_n`].
pub const INVERSION_PRECISION: f64 = 1e-9;

/// Smallest `eps` with `n_theorem1(eps, d) <= n`, found by bisection.
///
/// Returns the vacuous bound `1/2` when even `eps` just below `1/2` needs more
/// than `n` points.
pub fn disp_upper_from_n(n: u64, d: usize) -> Result<f64> {
    check_d(d)?;
    let d = d as f64;
    let n = n as f64;
    let mut hi = 0.5 * (1.0 - f64::EPSILON);
    if n_theorem1_unchecked(hi, d) > n {
        return Ok(0.5);
    }
    let mut lo = hi;
    while n_theorem1_unchecked(lo, d) <= n {
        lo *= 0.5;
        if lo < f64::MIN_POSITIVE {
            return Err(Error::Domain(format!("cannot invert for n = {n}")));
        }
    }
    // invariant: N(lo) > n >= N(hi)
    while hi / lo - 1.0 > INVERSION_PRECISION {
        let mid = (lo * hi).sqrt();
        if n_theorem1_unchecked(mid, d) <= n {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Smallest `c` with `disp_upper_from_n(n, d) <= c log2(n) sqrt(log2(d)/n)`
/// over the given grid, skipping vacuous entries.
pub fn fit_corollary_constant(ns: &[u64], ds: &[usize]) -> Result<Option<f64>> {
    let mut best: Option<f64> = None;
    for &d in ds {
        for &n in ns {
            if n < 2 {
                continue;
            }
            let eps = disp_upper_from_n(n, d)?;
            if eps >= 0.5 {
                continue;
            }
            let nf = n as f64;
            let shape = nf.log2() * ((d as f64).log2() / nf).sqrt();
            let c = eps / shape;
            best = Some(best.map_or(c, |b: f64| b.max(c)));
        }
    }
    Ok(best)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Smaller {
    Theorem1,
    Rudolf,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundsRow {
    pub eps: f64,
    pub d: usize,
    pub k: u32,
    pub n_required: u64,
    pub n_theorem1: f64,
    pub n_abstract: f64,
    pub n_rudolf: f64,
    pub better_of_two: Smaller,
    pub a_k: f64,
    pub a_k_exceeds_d: bool,
}

pub fn bounds_row(eps: f64, d: usize) -> Result<BoundsRow> {
    let params = k_from_epsilon(eps)?;
    let t1 = n_theorem1(eps, d)?;
    let rud = n_rudolf(eps, d)?;
    let ak = a_k(params);
    Ok(BoundsRow {
        eps,
        d,
        k: params.k(),
        n_required: n_required(params, d),
        n_theorem1: t1,
        n_abstract: n_abstract(eps, d)?,
        n_rudolf: rud,
        better_of_two: if rud < t1 {
            Smaller::Rudolf
        } else {
            Smaller::Theorem1
        },
        a_k: ak,
        a_k_exceeds_d: ak > d as f64,
    })
}

pub fn bounds_table(eps_list: &[f64], d_list: &[usize]) -> Result<Vec<BoundsRow>> {
    eps_list
        .iter()
        .flat_map(|&eps| d_list.iter().map(move |&d| bounds_row(eps, d)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(k: u32) -> GridParams {
        GridParams::new(k).unwrap()
    }

    #[test]
    fn n_required_examples() {
        assert_eq!(n_required(g(2), 2), 2048);
        assert_eq!(n_required(g(2), 4), 2560);
        assert_eq!(n_required(g(3), 2), 16 * 3 * 64 * 5);
    }

    #[test]
    fn closed_forms_at_quarter() {
        assert_eq!(n_theorem1(0.25, 2).unwrap(), 18432.0);
        assert_eq!(n_abstract(0.25, 2).unwrap(), 32768.0);
        assert_eq!(n_rudolf(0.25, 2).unwrap(), 1536.0);
        assert!(n_theorem1(0.5, 2).is_err());
        assert!(n_theorem1(0.25, 1).is_err());
    }

    #[test]
    fn ahr_examples() {
        assert!((lower_bound_ahr(100, 2).unwrap() - 1.0 / 404.0).abs() < 1e-15);
        assert_eq!(lower_bound_ahr(1, 2).unwrap(), 0.125);
        assert!(lower_bound_ahr(0, 2).is_err());
    }

    #[test]
    fn inversion_examples() {
        let eps = disp_upper_from_n(18432, 2).unwrap();
        assert!((eps - 0.25).abs() / 0.25 < 2e-9, "{eps}");
        assert!(n_theorem1(eps, 2).unwrap() <= 18432.0);
        // N(1/2, 2) = 2048, so fewer points give nothing below 1/2
        assert_eq!(disp_upper_from_n(2000, 2).unwrap(), 0.5);
        let near = disp_upper_from_n(2049, 2).unwrap();
        assert!(near < 0.5 && near > 0.499, "{near}");
        assert_eq!(disp_upper_from_n(10, 100).unwrap(), 0.5);
    }

    #[test]
    fn table_rows() {
        let rows = bounds_table(&[0.25, 0.1], &[2, 1024]).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].better_of_two, Smaller::Rudolf);
        assert!(rows[0].a_k_exceeds_d);
        assert_eq!(rows[1].better_of_two, Smaller::Theorem1);
        assert!(!rows[1].a_k_exceeds_d);
        assert!(rows.iter().all(|r| r.n_theorem1 <= r.n_abstract));
    }

    #[test]
    fn fitted_constant_covers_the_grid() {
        let ns = [1_000u64, 100_000, 10_000_000];
        let ds = [2usize, 10];
        let c = fit_corollary_constant(&ns, &ds).unwrap().unwrap();
        for &d in &ds {
            for &n in &ns {
                let eps = disp_upper_from_n(n, d).unwrap();
                if eps < 0.5 {
                    let nf = n as f64;
                    assert!(eps <= c * nf.log2() * ((d as f64).log2() / nf).sqrt() * (1.0 + 1e-12));
                }
            }
        }
    }
}
