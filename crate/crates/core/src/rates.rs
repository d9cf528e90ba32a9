//! Critical-radius fixed point, the critical functional and its minimizer,
//! closed-form adaptive-rate predictors, and minimax risk bounds.
//!
//! The critical radius solves `delta = c_lower * sigma * sqrt(k(theta*, delta))`
//! on the validity range of the width lower bound.  Since `k` is
//! non-increasing in `delta`, the residual `h(delta) = delta - c_lower *
//! sigma * sqrt(k(delta))` crosses zero at most once and bisection is exact
//! up to the bracket width.  `k` is integer valued, so the crossing may sit
//! at a jump; the solver then returns the midpoint of a bracket narrower
//! than 1e-9 and records the residual.

use serde::Serialize;

use crate::ellipse::{EllipseSpec, LocalizedSection, DEFAULT_ETA};
use crate::error::{Error, Result};
use crate::stream::derive_seed;
use crate::widths::{
    critical_dimension_bounds, critical_dimension_centered, gaussian_width_mc,
    lower_bound_valid_range, regularity_check, CriticalDimension, RegularityReport,
    DEFAULT_RANGE_C,
};

/// Solution of the critical-radius fixed point equation.
#[derive(Debug, Clone, Serialize)]
pub struct FixedPointResult {
    pub delta_n: f64,
    pub k_at_delta: CriticalDimension,
    pub c_lower: f64,
    pub iterations: usize,
    pub bracket_residual: f64,
}

/// Unique crossing of `h(delta) = delta - c_lower sigma sqrt(k(theta*, delta))`
/// inside the validity range, by bisection.
pub fn solve_fixed_point(
    e: &EllipseSpec,
    theta_star: &[f64],
    sigma: f64,
    c_lower: f64,
    eta: f64,
) -> Result<FixedPointResult> {
    if !(sigma > 0.0) {
        return Err(Error::invalid("sigma must be positive"));
    }
    if !(c_lower > 0.0) {
        return Err(Error::invalid("c_lower must be positive"));
    }
    let delta_max = lower_bound_valid_range(e, theta_star, DEFAULT_RANGE_C)?;
    if !(delta_max > 0.0) {
        return Err(Error::NoFixedPoint { delta_max, residual: f64::NEG_INFINITY });
    }
    let k_of = |delta: f64| -> Result<usize> {
        Ok(critical_dimension_bounds(e, theta_star, delta, eta)?.k)
    };
    let mut iterations = 0usize;
    let mut h = |delta: f64| -> Result<f64> {
        iterations += 1;
        Ok(delta - c_lower * sigma * (k_of(delta)? as f64).sqrt())
    };
    let top = h(delta_max)?;
    if top < 0.0 {
        return Err(Error::NoFixedPoint { delta_max, residual: top });
    }
    // k >= 1 everywhere, so h < 0 strictly below c_lower * sigma.
    let mut lo = 0.5 * (c_lower * sigma).min(delta_max);
    let mut hi = delta_max;
    while hi - lo > 1e-9 * hi.min(1.0) {
        let mid = 0.5 * (lo + hi);
        if h(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let delta_n = 0.5 * (lo + hi);
    let residual = h(delta_n)?;
    let k_at_delta = critical_dimension_bounds(e, theta_star, delta_n, eta)?;
    Ok(FixedPointResult {
        delta_n,
        k_at_delta,
        c_lower,
        iterations,
        bracket_residual: residual,
    })
}

/// One evaluation of the critical functional `delta^2/2 - sigma * width`,
/// with its analytic envelopes.  The upper envelope of the functional uses
/// the width lower bound and vice versa.
#[derive(Debug, Clone, Serialize)]
pub struct CriticalFunctionalPoint {
    pub delta: f64,
    pub value: f64,
    pub f_upper: f64,
    pub f_lower: f64,
    pub mc_mean: f64,
    pub mc_stderr: f64,
}

pub fn critical_functional(
    e: &EllipseSpec,
    theta_star: &[f64],
    sigma: f64,
    delta: f64,
    mc_samples: usize,
    seed: u64,
) -> Result<CriticalFunctionalPoint> {
    if !(sigma > 0.0) {
        return Err(Error::invalid("sigma must be positive"));
    }
    if delta < 0.0 {
        return Err(Error::invalid("delta must be >= 0"));
    }
    if delta == 0.0 {
        return Ok(CriticalFunctionalPoint {
            delta,
            value: 0.0,
            f_upper: 0.0,
            f_lower: 0.0,
            mc_mean: 0.0,
            mc_stderr: 0.0,
        });
    }
    let section = LocalizedSection::new(e.clone(), theta_star.to_vec(), delta, DEFAULT_ETA)?;
    let est = gaussian_width_mc(&section, mc_samples, seed)?;
    let half_sq = 0.5 * delta * delta;
    Ok(CriticalFunctionalPoint {
        delta,
        value: half_sq - sigma * est.mc_mean,
        f_upper: half_sq - sigma * est.lower_envelope,
        f_lower: half_sq - sigma * est.upper_envelope,
        mc_mean: est.mc_mean,
        mc_stderr: est.mc_stderr,
    })
}

/// Grid minimizer of the critical functional and the envelope level set
/// bracketing the true minimizer.
#[derive(Debug, Clone, Serialize)]
pub struct FunctionalMinimum {
    pub delta_0: f64,
    /// Interval spanned by grid points with `f_lower <= min f_upper`.
    pub level_set: (f64, f64),
    pub min_upper_envelope: f64,
    pub rows: Vec<CriticalFunctionalPoint>,
}

pub fn minimize_critical_functional(
    e: &EllipseSpec,
    theta_star: &[f64],
    sigma: f64,
    delta_grid: &[f64],
    mc_samples: usize,
    seed: u64,
) -> Result<FunctionalMinimum> {
    if delta_grid.is_empty() {
        return Err(Error::invalid("delta grid must be non-empty"));
    }
    let mut rows = Vec::with_capacity(delta_grid.len());
    for (i, &delta) in delta_grid.iter().enumerate() {
        if !(delta > 0.0) {
            return Err(Error::invalid("delta grid must be strictly positive"));
        }
        let sub_seed = derive_seed(seed, &[i as u64]);
        rows.push(critical_functional(e, theta_star, sigma, delta, mc_samples, sub_seed)?);
    }
    let argmin = rows
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.value.total_cmp(&b.value))
        .map(|(i, _)| i)
        .expect("non-empty rows");
    let min_upper = rows.iter().map(|r| r.f_upper).fold(f64::INFINITY, f64::min);
    let qualifying: Vec<f64> = rows
        .iter()
        .filter(|r| r.f_lower <= min_upper)
        .map(|r| r.delta)
        .collect();
    if qualifying.is_empty() {
        return Err(Error::invalid(
            "grid too coarse: envelope level set is empty",
        ));
    }
    let level_set = (
        qualifying.iter().cloned().fold(f64::INFINITY, f64::min),
        qualifying.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    );
    Ok(FunctionalMinimum {
        delta_0: rows[argmin].delta,
        level_set,
        min_upper_envelope: min_upper,
        rows,
    })
}

/// Eigendecay family of a rate prediction.
#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum RateFamily {
    Polynomial { alpha: f64 },
    Exponential { gamma: f64 },
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum RateLocation {
    Centered,
    Spiked,
}

/// Closed-form adaptive-rate prediction: the exponent of `sigma^2` in the
/// mean-squared error, an optional power of `log(1/sigma)` multiplying it,
/// and the evaluated critical-radius proxy.
#[derive(Debug, Clone, Serialize)]
pub struct RatePrediction {
    pub family: RateFamily,
    pub location: RateLocation,
    pub exponent: f64,
    pub log_power: Option<f64>,
    pub delta_n_proxy: f64,
    pub constant_note: String,
}

pub fn predicted_rate(family: RateFamily, location: RateLocation, sigma: f64) -> Result<RatePrediction> {
    if !(sigma > 0.0) {
        return Err(Error::invalid("sigma must be positive"));
    }
    let note = "up to constants/polylogs".to_string();
    match family {
        RateFamily::Polynomial { alpha } => {
            if !(alpha > 0.5) {
                return Err(Error::invalid(format!("polynomial family needs alpha > 1/2, got {alpha}")));
            }
            let exponent = match location {
                RateLocation::Centered => 2.0 * alpha / (2.0 * alpha + 1.0),
                RateLocation::Spiked => 4.0 * alpha / (4.0 * alpha + 1.0),
            };
            Ok(RatePrediction {
                family,
                location,
                exponent,
                log_power: None,
                delta_n_proxy: (sigma * sigma).powf(exponent / 2.0),
                constant_note: note,
            })
        }
        RateFamily::Exponential { gamma } => {
            if !(gamma > 0.5) {
                return Err(Error::invalid(format!("exponential family needs gamma > 1/2, got {gamma}")));
            }
            if sigma >= 1.0 {
                return Err(Error::invalid("exponential prediction needs sigma < 1"));
            }
            // Both locations share the sigma log^{1/(2 gamma)}(1/sigma) radius.
            Ok(RatePrediction {
                family,
                location,
                exponent: 1.0,
                log_power: Some(1.0 / gamma),
                delta_n_proxy: sigma * (1.0 / sigma).ln().powf(1.0 / (2.0 * gamma)),
                constant_note: note,
            })
        }
    }
}

/// Minimax risk bounds over the ellipse: `sigma^2 k(0, delta_n)` from below
/// and `sigma^2 k(0, delta_n / 2)` from above, both up to unspecified
/// universal constants.  The centered regularity check is a precondition of
/// the upper bound, which in full strength needs regularity at every
/// center; only the centered case is computable, so the report carries the
/// caveat.
#[derive(Debug, Clone, Serialize)]
pub struct MinimaxBounds {
    pub lower: f64,
    pub upper: f64,
    pub k_at_delta_n: usize,
    pub k_at_half_delta_n: usize,
    pub delta_n: f64,
    pub regularity: RegularityReport,
    pub constant_note: String,
}

pub fn minimax_bounds(e: &EllipseSpec, sigma: f64, c_lower: f64, eta: f64) -> Result<MinimaxBounds> {
    let zero = vec![0.0; e.dim()];
    let cap = e.radius() * e.eigenvalue(0).sqrt();
    let grid: Vec<f64> = (0..16)
        .map(|i| cap * 1e-3 * (1e3f64).powf(i as f64 / 15.0))
        .collect();
    let regularity = regularity_check(e, &zero, &grid, 4.0, eta)?;
    if !regularity.pass {
        return Err(Error::Numerical(
            "centered regularity check failed; minimax upper bound not certified".into(),
        ));
    }
    let fp = solve_fixed_point(e, &zero, sigma, c_lower, eta)?;
    let k_low = critical_dimension_centered(e, fp.delta_n, eta)?.k;
    let k_high = critical_dimension_centered(e, 0.5 * fp.delta_n, eta)?.k;
    Ok(MinimaxBounds {
        lower: sigma * sigma * k_low as f64,
        upper: sigma * sigma * k_high as f64,
        k_at_delta_n: k_low,
        k_at_half_delta_n: k_high,
        delta_n: fp.delta_n,
        regularity,
        constant_note: "bounds hold up to unspecified universal constants; the upper bound needs regularity at every center, verified here at the center only".into(),
    })
}

/// Numeric check of the error-sandwich proposition conditions at a center,
/// with the empirical sandwich constants taken from the computable
/// envelopes: `c_upper_emp` is the largest envelope-to-`delta sqrt(k)` ratio
/// over the probe grid, and `c_lower` is the caller's lower constant.
#[derive(Debug, Clone, Serialize)]
pub struct PropOneCheck {
    pub delta_n: f64,
    pub c_upper_emp: f64,
    /// Lower critical functional is valley-shaped on the probe grid.
    pub unimodal: bool,
    /// Largest probed `c1 < 1` with
    /// `c_upper^2 k(c1 delta_n) <= c_lower^2 k(delta_n) / (4 c1^2)`.
    pub c1: Option<f64>,
    /// Smallest probed `c2 > 1` with `c2 delta_n >= 2 sigma c_upper sqrt(k(c2 delta_n))`.
    pub c2: Option<f64>,
    pub pass: bool,
    pub band: Option<(f64, f64)>,
}

pub fn check_prop_conditions(
    e: &EllipseSpec,
    theta_star: &[f64],
    sigma: f64,
    c_lower: f64,
    eta: f64,
) -> Result<PropOneCheck> {
    let fp = solve_fixed_point(e, theta_star, sigma, c_lower, eta)?;
    let dn = fp.delta_n;
    let k_of = |delta: f64| -> Result<f64> {
        Ok(critical_dimension_bounds(e, theta_star, delta, eta)?.k as f64)
    };

    // Empirical upper sandwich constant over two decades around delta_n.
    let probe: Vec<f64> = (0..40)
        .map(|i| dn / 20.0 * (400.0f64).powf(i as f64 / 39.0))
        .collect();
    let mut c_up: f64 = 1.0;
    for &delta in &probe {
        let ub = crate::widths::width_upper_bound(e, theta_star, delta, eta)?;
        let k = k_of(delta)?;
        c_up = c_up.max(ub / (delta * k.sqrt()));
    }

    // Valley-shape check of the lower critical functional.  The critical
    // dimension is integer valued, so each of its unit jumps moves the
    // functional by up to sigma c delta (sqrt(k+1) - sqrt(k)); wiggles
    // within that quantization are not shape violations.
    let ks: Vec<f64> = probe.iter().map(|&d| k_of(d)).collect::<Result<_>>()?;
    let f_lower: Vec<f64> = probe
        .iter()
        .zip(&ks)
        .map(|(&delta, &k)| 0.5 * delta * delta - sigma * c_up * delta * k.sqrt())
        .collect();
    let argmin = f_lower
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.total_cmp(b))
        .map(|(i, _)| i)
        .unwrap();
    let quant = |i: usize| {
        sigma * c_up * probe[i] * ((ks[i] + 1.0).sqrt() - ks[i].sqrt()) + 1e-12
    };
    let unimodal = (0..argmin).all(|i| f_lower[i + 1] <= f_lower[i] + quant(i + 1))
        && (argmin..f_lower.len() - 1).all(|i| f_lower[i + 1] >= f_lower[i] - quant(i + 1));

    let k_dn = k_of(dn)?;
    let mut c1 = None;
    let mut probe_c1 = 0.95;
    while probe_c1 > 1e-4 {
        if c_up * c_up * k_of(probe_c1 * dn)? <= c_lower * c_lower * k_dn / (4.0 * probe_c1 * probe_c1) {
            c1 = Some(probe_c1);
            break;
        }
        probe_c1 /= 1.3;
    }
    let mut c2 = None;
    let mut probe_c2 = 1.1;
    while probe_c2 < 1e4 {
        let delta = probe_c2 * dn;
        if delta >= 2.0 * sigma * c_up * k_of(delta)?.sqrt() {
            c2 = Some(probe_c2);
            break;
        }
        probe_c2 *= 1.3;
    }
    let pass = unimodal && c1.is_some() && c2.is_some();
    let band = match (c1, c2) {
        (Some(a), Some(b)) => Some((a * dn, b * dn)),
        _ => None,
    };
    Ok(PropOneCheck {
        delta_n: dn,
        c_upper_emp: c_up,
        unimodal,
        c1,
        c2,
        pass,
        band,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::ols_slope;
    use statrs::function::gamma::ln_gamma;

    fn chi_mean(d: usize) -> f64 {
        let d = d as f64;
        2.0f64.sqrt() * (ln_gamma((d + 1.0) / 2.0) - ln_gamma(d / 2.0)).exp()
    }

    #[test]
    fn fixed_point_constant_k() {
        let e = EllipseSpec::ball(100, 1.0).unwrap();
        let fp = solve_fixed_point(&e, &vec![0.0; 100], 0.01, 1.0, 1e-5).unwrap();
        assert!((fp.delta_n - 0.1).abs() <= 1e-9 * 0.1, "{}", fp.delta_n);
        assert_eq!(fp.k_at_delta.k, 100);
        assert!(fp.bracket_residual.abs() <= 1e-9);
    }

    #[test]
    fn fixed_point_polynomial_scaling() {
        let e = EllipseSpec::polynomial(1.0, 1.0, 500, 1.0).unwrap();
        let zero = vec![0.0; 500];
        let fp = solve_fixed_point(&e, &zero, 0.01, 1.0, 1e-5).unwrap();
        let proxy = (0.01f64 * 0.01).powf(1.0 / 3.0);
        let ratio = fp.delta_n / proxy;
        assert!((0.5..2.0).contains(&ratio), "delta_n {} proxy {proxy}", fp.delta_n);
    }

    #[test]
    fn fixed_point_monotone_in_sigma() {
        let e = EllipseSpec::polynomial(1.0, 1.0, 800, 1.0).unwrap();
        let zero = vec![0.0; 800];
        let mut prev = 0.0;
        for i in 0..10 {
            let sigma = 1e-3 * (100.0f64).powf(i as f64 / 9.0);
            let fp = solve_fixed_point(&e, &zero, sigma, 1.0, 1e-5).unwrap();
            assert!(fp.delta_n >= prev, "sigma {sigma}");
            prev = fp.delta_n;
        }
    }

    #[test]
    fn fixed_point_no_solution_in_range() {
        // Large sigma pushes the crossing beyond sqrt(mu_1).
        let e = EllipseSpec::ball(100, 1.0).unwrap();
        let err = solve_fixed_point(&e, &vec![0.0; 100], 0.5, 1.0, 1e-5).unwrap_err();
        assert!(matches!(err, Error::NoFixedPoint { .. }), "{err}");
    }

    #[test]
    fn critical_functional_zero_delta() {
        let e = EllipseSpec::ball(5, 1.0).unwrap();
        let p = critical_functional(&e, &vec![0.0; 5], 0.1, 0.0, 10, 0).unwrap();
        assert_eq!(p.value, 0.0);
        assert_eq!(p.f_upper, 0.0);
        assert_eq!(p.f_lower, 0.0);
    }

    #[test]
    fn critical_functional_ball_closed_form() {
        // For the ball and delta < 1 the width is delta * E||w||, making the
        // functional a quadratic with minimizer sigma * E||w||.
        let d = 40;
        let e = EllipseSpec::ball(d, 1.0).unwrap();
        let zero = vec![0.0; d];
        let sigma = 0.02;
        let ew = chi_mean(d);
        for &delta in &[0.05, 0.1, 0.2] {
            let p = critical_functional(&e, &zero, sigma, delta, 3000, 17).unwrap();
            let analytic = 0.5 * delta * delta - sigma * delta * ew;
            assert!(
                (p.value - analytic).abs() <= 3.0 * sigma * p.mc_stderr + 1e-12,
                "delta {delta}: {} vs {analytic}",
                p.value
            );
            // Envelopes sandwich the estimate within MC noise.
            assert!(p.f_lower <= p.value + 3.0 * sigma * p.mc_stderr);
            assert!(p.value - 3.0 * sigma * p.mc_stderr <= p.f_upper);
        }
    }

    #[test]
    fn minimizer_ball_near_closed_form() {
        let d = 40;
        let e = EllipseSpec::ball(d, 1.0).unwrap();
        let zero = vec![0.0; d];
        let sigma = 0.02;
        let target = sigma * chi_mean(d);
        let grid: Vec<f64> = (1..=30).map(|i| i as f64 * 0.01).collect();
        let m = minimize_critical_functional(&e, &zero, sigma, &grid, 2000, 3).unwrap();
        assert!(
            (m.delta_0 - target).abs() <= 0.01 + 1e-12,
            "delta_0 {} target {target}",
            m.delta_0
        );
        assert!(m.level_set.0 <= m.delta_0 && m.delta_0 <= m.level_set.1);
    }

    #[test]
    fn minimizer_in_prop_band() {
        let e = EllipseSpec::polynomial(1.0, 1.0, 300, 1.0).unwrap();
        let zero = vec![0.0; 300];
        let sigma = 0.05;
        let check = check_prop_conditions(&e, &zero, sigma, crate::widths::DEFAULT_C_LOWER, 1e-5).unwrap();
        assert!(check.pass, "{check:?}");
        let (lo, hi) = check.band.unwrap();
        let grid: Vec<f64> = (0..18)
            .map(|i| check.delta_n / 10.0 * (100.0f64).powf(i as f64 / 17.0))
            .collect();
        let m = minimize_critical_functional(&e, &zero, sigma, &grid, 500, 9).unwrap();
        assert!(
            m.delta_0 >= lo && m.delta_0 <= hi,
            "delta_0 {} outside [{lo}, {hi}]",
            m.delta_0
        );
    }

    #[test]
    fn predicted_rate_exponents() {
        let p = predicted_rate(RateFamily::Polynomial { alpha: 1.0 }, RateLocation::Centered, 0.01).unwrap();
        assert!((p.exponent - 2.0 / 3.0).abs() < 1e-15);
        assert!(p.log_power.is_none());

        let s = predicted_rate(RateFamily::Polynomial { alpha: 1.0 }, RateLocation::Spiked, 0.01).unwrap();
        assert!((s.exponent - 4.0 / 5.0).abs() < 1e-15);

        let x = predicted_rate(RateFamily::Exponential { gamma: 1.0 }, RateLocation::Centered, 0.01).unwrap();
        assert_eq!(x.exponent, 1.0);
        assert_eq!(x.log_power, Some(1.0));
        let expect = 0.01 * (100.0f64).ln().sqrt();
        assert!((x.delta_n_proxy - expect).abs() < 1e-15);

        assert!(predicted_rate(RateFamily::Polynomial { alpha: 0.4 }, RateLocation::Centered, 0.01).is_err());
        assert!(predicted_rate(RateFamily::Exponential { gamma: 0.5 }, RateLocation::Centered, 0.01).is_err());
    }

    #[test]
    fn minimax_ball_proportional_to_dimension() {
        let e = EllipseSpec::ball(100, 1.0).unwrap();
        let b = minimax_bounds(&e, 0.01, 1.0, 1e-5).unwrap();
        assert_eq!(b.k_at_delta_n, 100);
        assert_eq!(b.k_at_half_delta_n, 100);
        assert!((b.lower - 1e-4 * 100.0).abs() < 1e-15);
        assert!((b.upper - 1e-4 * 100.0).abs() < 1e-15);
    }

    #[test]
    fn minimax_polynomial_k_ratio_bounded() {
        let alpha = 1.0;
        let e = EllipseSpec::polynomial(alpha, 1.0, 1000, 1.0).unwrap();
        let b = minimax_bounds(&e, 0.01, 1.0, 1e-5).unwrap();
        let ratio = b.k_at_half_delta_n as f64 / b.k_at_delta_n as f64;
        assert!(
            ratio <= 2.0f64.powf(1.0 / alpha) + 1.0,
            "ratio {ratio}"
        );
        assert!(b.lower <= b.upper);
    }

    #[test]
    fn minimax_lower_vanishes_with_sigma() {
        let e = EllipseSpec::polynomial(1.0, 1.0, 1000, 1.0).unwrap();
        let mut prev = f64::INFINITY;
        for i in 0..8 {
            let sigma = 0.05 / (2.0f64).powi(i);
            let b = minimax_bounds(&e, sigma, 1.0, 1e-5).unwrap();
            assert!(b.lower <= prev);
            prev = b.lower;
        }
        assert!(prev < 1e-4);
    }

    #[test]
    fn empirical_median_error_tracks_delta_n() {
        // The median estimation error over replicates stays inside a fixed
        // multiple band of the critical radius across the sigma grid.
        use crate::optimize::lse;
        use crate::stream::{normal_vector, stream_rng};
        let d = 500;
        let e = EllipseSpec::polynomial(1.0, 1.0, d, 1.0).unwrap();
        let zero = vec![0.0; d];
        let (c_low, c_high) = (0.5, 1.5);
        for i in 0..7u64 {
            let sigma = 1e-2 * (31.6f64).powf(i as f64 / 6.0);
            let fp = solve_fixed_point(&e, &zero, sigma, 1.0, 1e-5).unwrap();
            let mut errs: Vec<f64> = (0..200u64)
                .map(|r| {
                    let mut rng = stream_rng(77, &[i, r]);
                    let w = normal_vector(&mut rng, d);
                    let est = lse(&e, &zero, sigma, &w).unwrap();
                    est.iter().map(|x| x * x).sum::<f64>().sqrt()
                })
                .collect();
            errs.sort_by(|a, b| a.total_cmp(b));
            let median = 0.5 * (errs[99] + errs[100]);
            let ratio = median / fp.delta_n;
            println!("sigma {sigma:.4}: median/delta_n = {ratio:.4}");
            assert!(
                (c_low..c_high).contains(&ratio),
                "sigma {sigma}: ratio {ratio} outside [{c_low}, {c_high}]"
            );
        }
    }

    #[test]
    fn fixed_point_slope_recovers_exponent() {
        // Light version of the exponent scan: alpha = 1 over two decades.
        let e = EllipseSpec::polynomial(1.0, 1.0, 2000, 1.0).unwrap();
        let zero = vec![0.0; 2000];
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..12 {
            let sigma = 1e-3 * (100.0f64).powf(i as f64 / 11.0);
            let fp = solve_fixed_point(&e, &zero, sigma, 1.0, 1e-5).unwrap();
            xs.push(sigma.ln());
            ys.push(fp.delta_n.ln());
        }
        let (slope, _, _) = ols_slope(&xs, &ys);
        assert!((slope - 2.0 / 3.0).abs() <= 0.03, "slope {slope}");
    }
}
