//! Kolmogorov widths, critical dimensions, Monte-Carlo localized Gaussian
//! widths with analytic envelopes, the regularity check, and the
//! boundary-proximity map `phi`.
//!
//! All width formulas are stated for the unit-radius ellipse; for radius `R`
//! they are evaluated with the effective eigenvalues `R^2 mu_j`, which is
//! the same ellipse written with unit radius.  `phi` is invariant under the
//! joint rescaling of `(theta*, delta)` by `R`, so it consumes raw inputs.
//!
//! Exact critical dimensions are only available at the center; everywhere
//! else the module returns certified lower/upper bounds, and centers outside
//! the covered families (zero, single spike, elliptic norm <= R/2) are an
//! explicit error rather than a guess.

use rayon::prelude::*;
use serde::Serialize;

use crate::ellipse::{contains, elliptic_norm, EllipseSpec, LocalizedSection, DEFAULT_MEMBERSHIP_TOL};
use crate::error::{Error, Result};
use crate::optimize::{default_gap_tol, max_linear_over_intersection};
use crate::stream::{normal_vector, stream_rng};
use crate::util::{l2_norm, mean_stderr};

/// Default lower-bound constant; the constant produced by the small-norm
/// case of the width lower bound is 3/10.
pub const DEFAULT_C_LOWER: f64 = 0.3;

/// Default constant scaling the validity range of the width lower bound.
pub const DEFAULT_RANGE_C: f64 = 1.0;

/// Critical dimension of a localized section, exact only at the center.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CriticalDimension {
    pub k: usize,
    pub exact: bool,
    pub lower: usize,
    pub upper: usize,
}

impl CriticalDimension {
    fn exact(k: usize) -> Self {
        CriticalDimension { k, exact: true, lower: k, upper: k }
    }

    fn bounded(lower: usize, upper: usize) -> Self {
        let lower = lower.clamp(1, upper);
        CriticalDimension { k: upper, exact: false, lower, upper }
    }
}

/// Monte-Carlo width estimate together with its analytic envelopes.
#[derive(Debug, Clone, Serialize)]
pub struct WidthEstimate {
    pub mc_mean: f64,
    pub mc_stderr: f64,
    pub n_samples: usize,
    pub lower_envelope: f64,
    pub upper_envelope: f64,
    pub k_used: CriticalDimension,
}

/// Width lower bound value; 0 with `in_range = false` outside the validity
/// range of the bound.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LowerBound {
    pub value: f64,
    pub in_range: bool,
}

fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta < 0.1 {
        Ok(())
    } else {
        Err(Error::invalid(format!("eta must lie in (0, 0.1), got {eta}")))
    }
}

fn check_center(e: &EllipseSpec, theta: &[f64]) -> Result<()> {
    if !contains(e, theta, DEFAULT_MEMBERSHIP_TOL)? {
        return Err(Error::invalid("center violates the ellipse constraint"));
    }
    Ok(())
}

/// Kolmogorov width of the centered section at locality `(1-eta) delta`:
/// `min(sqrt(mu_{k+1}), (1-eta) delta)` for `k < d`, and 0 for `k = d`.
pub fn kolmogorov_width_centered(e: &EllipseSpec, k: usize, delta: f64, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    let d = e.dim();
    if k > d {
        return Err(Error::invalid(format!("k = {k} out of range [0, {d}]")));
    }
    if k == d {
        return Ok(0.0);
    }
    Ok(e.eff_eigenvalue(k).sqrt().min((1.0 - eta) * delta))
}

/// Smallest `k` in `[1, d]` whose centered Kolmogorov width drops below
/// `(9/10) delta`; always exists since the width vanishes at `k = d`.
pub fn critical_dimension_centered(e: &EllipseSpec, delta: f64, eta: f64) -> Result<CriticalDimension> {
    check_eta(eta)?;
    if !(delta > 0.0) {
        return Err(Error::invalid("delta must be positive"));
    }
    let d = e.dim();
    // For eta < 0.1 the ball term never triggers the 0.9 delta threshold,
    // so the predicate reduces to sqrt(mu_{k+1}) <= 0.9 delta; it is
    // monotone in k because the eigenvalues are sorted.
    let pred = |k: usize| k == d || e.eff_eigenvalue(k).sqrt() <= 0.9 * delta;
    let mut lo = 1usize;
    let mut hi = d;
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(CriticalDimension::exact(lo))
}

enum CenterClass {
    Centered,
    Spiked { coord: usize },
    SmallNorm,
}

fn classify_center(e: &EllipseSpec, theta: &[f64]) -> Result<CenterClass> {
    e.check_dim(theta)?;
    let support: Vec<usize> = theta
        .iter()
        .enumerate()
        .filter(|(_, &t)| t != 0.0)
        .map(|(j, _)| j)
        .collect();
    if support.is_empty() {
        return Ok(CenterClass::Centered);
    }
    if support.len() == 1 {
        return Ok(CenterClass::Spiked { coord: support[0] });
    }
    let frac = elliptic_norm(e, theta)? / e.radius();
    if frac <= 0.5 {
        return Ok(CenterClass::SmallNorm);
    }
    Err(Error::UnsupportedCenter(
        "center is neither zero, single-spiked, nor of elliptic norm <= R/2".into(),
    ))
}

/// Smallest k with `(3/2) sqrt(mu_{k+1}) <= 0.9 delta` (d if none smaller).
fn k_prime(e: &EllipseSpec, delta: f64) -> usize {
    let d = e.dim();
    let pred = |k: usize| k == d || 1.5 * e.eff_eigenvalue(k).sqrt() <= 0.9 * delta;
    let mut lo = 1usize;
    let mut hi = d;
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo
}

/// Largest `k` in `[1, d]` with `mu_k^2 >= threshold` (effective
/// eigenvalues); `None` if already `mu_1^2 < threshold`.
fn largest_prefix(e: &EllipseSpec, threshold: f64) -> Option<usize> {
    let d = e.dim();
    let pred = |k: usize| {
        let m = e.eff_eigenvalue(k - 1);
        m * m >= threshold
    };
    if !pred(1) {
        return None;
    }
    let mut lo = 1usize;
    let mut hi = d;
    while lo < hi {
        let mid = lo + (hi - lo).div_ceil(2);
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    Some(lo)
}

fn spiked_m_upper(e: &EllipseSpec, coord: usize, delta: f64, eta: f64) -> usize {
    let xi = (1.0 - eta) * delta;
    let thresh = xi * xi * e.eff_eigenvalue(coord) / 64.0;
    largest_prefix(e, thresh).unwrap_or(e.dim())
}

fn spiked_m_lower(e: &EllipseSpec, coord: usize, delta: f64) -> usize {
    let thresh = delta * delta * e.eff_eigenvalue(coord);
    largest_prefix(e, thresh).unwrap_or(0)
}

/// Lower/upper bounds on the critical dimension at a general center.
///
/// For the zero center this delegates to the exact scan.  For a spiked
/// center the upper bound is the largest `k` with
/// `mu_k^2 >= ((1-eta) delta)^2 mu_s / 64`, intersected with the small-norm
/// bound when applicable, and the lower bound is `max(1, floor(0.09 m_l))`
/// with `m_l` the largest `k` with `mu_k^2 >= delta^2 mu_s`.  The reported
/// `k` is the conservative upper bound.
pub fn critical_dimension_bounds(
    e: &EllipseSpec,
    theta_star: &[f64],
    delta: f64,
    eta: f64,
) -> Result<CriticalDimension> {
    check_eta(eta)?;
    if !(delta > 0.0) {
        return Err(Error::invalid("delta must be positive"));
    }
    check_center(e, theta_star)?;
    match classify_center(e, theta_star)? {
        CenterClass::Centered => critical_dimension_centered(e, delta, eta),
        CenterClass::Spiked { coord } => {
            let m_u = spiked_m_upper(e, coord, delta, eta);
            let m_l = spiked_m_lower(e, coord, delta);
            let frac = elliptic_norm(e, theta_star)? / e.radius();
            let upper = if frac <= 0.5 { m_u.min(k_prime(e, delta)) } else { m_u };
            let lower = ((0.09 * m_l as f64).floor() as usize).max(1);
            Ok(CriticalDimension::bounded(lower, upper))
        }
        CenterClass::SmallNorm => Ok(CriticalDimension::bounded(1, k_prime(e, delta))),
    }
}

/// The critical dimension and feasible tail sum behind the width upper
/// bound: `(k, tail)` with the bound being `delta sqrt(k) + sqrt(tail)`.
fn upper_bound_parts(
    e: &EllipseSpec,
    theta_star: &[f64],
    delta: f64,
    eta: f64,
) -> Result<(CriticalDimension, f64)> {
    match classify_center(e, theta_star)? {
        CenterClass::Centered => {
            let k = critical_dimension_centered(e, delta, eta)?;
            let tail: f64 = (k.k..e.dim()).map(|j| e.eff_eigenvalue(j)).sum();
            Ok((k, tail))
        }
        CenterClass::Spiked { coord } => {
            let k = critical_dimension_bounds(e, theta_star, delta, eta)?;
            let m_u = spiked_m_upper(e, coord, delta, eta);
            let tail: f64 = (m_u..e.dim()).map(|j| e.eff_eigenvalue(j)).sum();
            Ok((k, delta * delta * tail))
        }
        CenterClass::SmallNorm => Err(Error::UnsupportedCenter(
            "no feasible tail certificate for this center".into(),
        )),
    }
}

/// Feasible-gamma width upper bound `delta sqrt(k) + sqrt(tail)`.
pub fn width_upper_bound(e: &EllipseSpec, theta_star: &[f64], delta: f64, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    if !(delta > 0.0) {
        return Err(Error::invalid("delta must be positive"));
    }
    check_center(e, theta_star)?;
    let (k, tail) = upper_bound_parts(e, theta_star, delta, eta)?;
    Ok(delta * (k.k as f64).sqrt() + tail.sqrt())
}

/// Width lower bound `c_lower * delta * sqrt(1 - (enorm/R)^2) * sqrt(k_low)`
/// with `k_low` a certified lower bound on the critical dimension; returns 0
/// flagged out-of-range when `delta` exceeds the validity range.
pub fn width_lower_bound(
    e: &EllipseSpec,
    theta_star: &[f64],
    delta: f64,
    eta: f64,
    c_lower: f64,
) -> Result<LowerBound> {
    check_eta(eta)?;
    if !(delta > 0.0) {
        return Err(Error::invalid("delta must be positive"));
    }
    if !(c_lower > 0.0) {
        return Err(Error::invalid("c_lower must be positive"));
    }
    check_center(e, theta_star)?;
    let range = lower_bound_valid_range(e, theta_star, DEFAULT_RANGE_C)?;
    if delta > range {
        return Ok(LowerBound { value: 0.0, in_range: false });
    }
    let k_low = match classify_center(e, theta_star)? {
        CenterClass::Centered => critical_dimension_centered(e, delta, eta)?.k,
        CenterClass::Spiked { .. } => critical_dimension_bounds(e, theta_star, delta, eta)?.lower,
        CenterClass::SmallNorm => 1,
    };
    let frac = elliptic_norm(e, theta_star)? / e.radius();
    let value = c_lower * delta * (1.0 - frac * frac).max(0.0).sqrt() * (k_low as f64).sqrt();
    Ok(LowerBound { value, in_range: true })
}

/// Per-sample optima of the localized Gaussian width Monte Carlo; sample `i`
/// draws from the stream `(seed, i)`, so the output is independent of
/// execution order.
pub fn gaussian_width_samples(
    section: &LocalizedSection,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if n_samples == 0 {
        return Err(Error::invalid("n_samples must be >= 1"));
    }
    let d = section.dim();
    let delta = section.delta();
    (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, &[i as u64]);
            let w = normal_vector(&mut rng, d);
            max_linear_over_intersection(section, &w, default_gap_tol(&w, delta))
                .map(|cert| cert.primal_value)
                .map_err(|err| Error::Numerical(format!("width sample {i}: {err}")))
        })
        .collect()
}

/// Monte-Carlo estimate of the localized Gaussian width, with the analytic
/// envelopes and the (bounded) critical dimension used by them.
pub fn gaussian_width_mc(
    section: &LocalizedSection,
    n_samples: usize,
    seed: u64,
) -> Result<WidthEstimate> {
    let values = gaussian_width_samples(section, n_samples, seed)?;
    let (mean, stderr) = mean_stderr(&values);
    let e = section.ellipse();
    let theta = section.center();
    let delta = section.delta();
    let eta = section.eta();
    let upper = width_upper_bound(e, theta, delta, eta)?;
    let lower = width_lower_bound(e, theta, delta, eta, DEFAULT_C_LOWER)?;
    let k_used = critical_dimension_bounds(e, theta, delta, eta)?;
    Ok(WidthEstimate {
        mc_mean: mean,
        mc_stderr: stderr,
        n_samples,
        lower_envelope: lower.value,
        upper_envelope: upper,
        k_used,
    })
}

/// One grid point of the regularity check.
#[derive(Debug, Clone, Serialize)]
pub struct RegularityRow {
    pub delta: f64,
    pub k: usize,
    pub tail_sum: f64,
    pub ratio: f64,
    pub pass: bool,
}

/// Regularity report: the feasible tail must stay below `c delta^2 k`.
#[derive(Debug, Clone, Serialize)]
pub struct RegularityReport {
    pub c: f64,
    pub rows: Vec<RegularityRow>,
    pub pass: bool,
}

pub fn regularity_check(
    e: &EllipseSpec,
    theta_star: &[f64],
    delta_grid: &[f64],
    c: f64,
    eta: f64,
) -> Result<RegularityReport> {
    check_eta(eta)?;
    check_center(e, theta_star)?;
    if delta_grid.is_empty() {
        return Err(Error::invalid("delta grid must be non-empty"));
    }
    let mut rows = Vec::with_capacity(delta_grid.len());
    for &delta in delta_grid {
        if !(delta > 0.0) {
            return Err(Error::invalid("delta grid must be strictly positive"));
        }
        let (k, tail) = upper_bound_parts(e, theta_star, delta, eta)?;
        let budget = c * delta * delta * k.k as f64;
        rows.push(RegularityRow {
            delta,
            k: k.k,
            tail_sum: tail,
            ratio: tail / (delta * delta * k.k as f64),
            pass: tail <= budget,
        });
    }
    let pass = rows.iter().all(|r| r.pass);
    Ok(RegularityReport { c, rows, pass })
}

/// Boundary-proximity map: 1 when `delta > ||theta*|| / (1 - eta)`, else
/// the smallest `r` (capped at 1) with
/// `delta^2 <= (1-eta)^{-2} sum_i r^2/(r+mu_i)^2 theta*_i^2`,
/// found by bisection of the non-decreasing right side.
pub fn phi(e: &EllipseSpec, theta_star: &[f64], delta: f64, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    e.check_dim(theta_star)?;
    if !(delta > 0.0) {
        return Err(Error::invalid("delta must be positive"));
    }
    let a = 1.0 - eta;
    let l2 = l2_norm(theta_star);
    if delta > l2 / a {
        return Ok(1.0);
    }
    let f = |r: f64| -> f64 {
        theta_star
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let q = r / (r + e.eigenvalue(i));
                q * q * t * t
            })
            .sum()
    };
    let target = a * a * delta * delta;
    // The cap at 1 makes any root past r = 1 irrelevant.
    if f(1.0) < target {
        return Ok(1.0);
    }
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    while hi - lo > 1e-12 * (1.0 + lo) {
        let mid = 0.5 * (lo + hi);
        if f(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Largest `delta` with `phi(delta) <= x`; infinite for `x >= 1`, zero when
/// no positive `delta` qualifies.  Uses the default eta.
pub fn phi_inverse(e: &EllipseSpec, theta_star: &[f64], x: f64) -> Result<f64> {
    e.check_dim(theta_star)?;
    if x < 0.0 {
        return Err(Error::invalid("phi_inverse needs x >= 0"));
    }
    if x >= 1.0 {
        return Ok(f64::INFINITY);
    }
    let eta = crate::ellipse::DEFAULT_ETA;
    let a = 1.0 - eta;
    let l2 = l2_norm(theta_star);
    if l2 == 0.0 {
        // phi is identically 1 for the zero center.
        return Ok(0.0);
    }
    if x == 0.0 {
        // phi is strictly positive for every positive delta.
        return Ok(0.0);
    }
    let mut hi = l2 / a * (1.0 + 1e-9);
    let mut lo = 0.5 * hi;
    while phi(e, theta_star, lo, eta)? > x {
        lo *= 0.5;
        if lo < 1e-300 {
            return Ok(0.0);
        }
    }
    while hi - lo > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        if phi(e, theta_star, mid, eta)? <= x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Upper end of the validity range of the width lower bound:
/// `min(c * phi_inverse((enorm^{-1} - 1)^2), R sqrt(mu_1))`; the inverse is
/// infinite whenever `enorm(theta*)/R <= 1/2`.
pub fn lower_bound_valid_range(e: &EllipseSpec, theta_star: &[f64], c: f64) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::invalid("range constant c must be positive"));
    }
    check_center(e, theta_star)?;
    let cap = e.eff_eigenvalue(0).sqrt();
    let frac = elliptic_norm(e, theta_star)? / e.radius();
    if frac == 0.0 {
        return Ok(cap);
    }
    let x = (1.0 / frac - 1.0).powi(2);
    if x >= 1.0 {
        return Ok(cap);
    }
    Ok((c * phi_inverse(e, theta_star, x)?).min(cap))
}
