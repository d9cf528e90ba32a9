//! Ellipse data model: the elliptical seminorm, membership, localized
//! sections, and problem rescaling to unit radius.
//!
//! An ellipse is given by non-increasing aspect ratios `mu_1 >= ... >= mu_d`
//! and a radius `R`; it is the set of `theta` with
//! `sum_j theta_j^2 / mu_j <= R^2`.  A zero aspect ratio is a hard equality
//! constraint: the corresponding coordinate must be exactly zero, and the
//! seminorm of any vector violating that is `+inf`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in the ambient space; length must match the ellipse dimension
/// wherever the two are paired.
pub type PointVec = Vec<f64>;

/// Locality constant used in the critical-dimension definition. Must lie in
/// (0, 0.1); the proofs behind the width bounds pick 1e-5.
pub const DEFAULT_ETA: f64 = 1e-5;

/// Relative tolerance for membership checks (bisection residual scale).
pub const DEFAULT_MEMBERSHIP_TOL: f64 = 1e-9;

/// Ellipse `{ theta : sum_j theta_j^2 / mu_j <= R^2 }` with non-increasing
/// non-negative `mu` and positive radius `R`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EllipseSpec {
    eigenvalues: Vec<f64>,
    radius: f64,
}

impl EllipseSpec {
    pub fn new(eigenvalues: Vec<f64>, radius: f64) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::invalid("ellipse needs at least one eigenvalue"));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::invalid(format!("radius must be positive, got {radius}")));
        }
        let mut prev = f64::INFINITY;
        for (j, &m) in eigenvalues.iter().enumerate() {
            if !m.is_finite() || m < 0.0 {
                return Err(Error::invalid(format!("eigenvalue {} is {m}, must be finite and >= 0", j + 1)));
            }
            if m > prev {
                return Err(Error::invalid(format!(
                    "eigenvalues must be non-increasing, violated at index {}",
                    j + 1
                )));
            }
            prev = m;
        }
        if eigenvalues[0] == 0.0 {
            return Err(Error::invalid("at least one eigenvalue must be positive"));
        }
        Ok(EllipseSpec { eigenvalues, radius })
    }

    /// Unit ball of the given dimension and radius.
    pub fn ball(dim: usize, radius: f64) -> Result<Self> {
        Self::new(vec![1.0; dim], radius)
    }

    /// Polynomial decay family `mu_j = c * j^(-2 alpha)`.
    pub fn polynomial(alpha: f64, c: f64, dim: usize, radius: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::invalid("polynomial family needs c > 0"));
        }
        let eig = (1..=dim).map(|j| c * (j as f64).powf(-2.0 * alpha)).collect();
        Self::new(eig, radius)
    }

    /// Exponential decay family `mu_j = c1 * exp(-c2 * j^gamma)`.
    pub fn exponential(gamma: f64, c1: f64, c2: f64, dim: usize, radius: f64) -> Result<Self> {
        if !(c1 > 0.0) || !(c2 > 0.0) {
            return Err(Error::invalid("exponential family needs c1 > 0 and c2 > 0"));
        }
        let eig = (1..=dim)
            .map(|j| c1 * (-c2 * (j as f64).powf(gamma)).exp())
            .collect();
        Self::new(eig, radius)
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvalue(&self, j: usize) -> f64 {
        self.eigenvalues[j]
    }

    /// Effective eigenvalue `R^2 * mu_j`: the ellipse equals the unit-radius
    /// ellipse with these eigenvalues, which is the normalization the width
    /// formulas are stated in.
    pub(crate) fn eff_eigenvalue(&self, j: usize) -> f64 {
        self.radius * self.radius * self.eigenvalues[j]
    }

    pub(crate) fn check_dim(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        Ok(())
    }

    /// Parse an ellipse from its JSON document form: either
    /// `{"eigenvalues":[...],"radius":r}` or a decay family
    /// `{"family":"polynomial","alpha":..,"c":..,"d":..}` /
    /// `{"family":"exponential","gamma":..,"c1":..,"c2":..,"d":..}`
    /// (family radius defaults to 1).
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: EllipseDoc = serde_json::from_str(text)?;
        doc.build()
    }
}

/// JSON document form of an ellipse.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum EllipseDoc {
    Inline {
        eigenvalues: Vec<f64>,
        radius: f64,
    },
    Family(FamilyDoc),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum FamilyDoc {
    Polynomial {
        alpha: f64,
        c: f64,
        d: usize,
        #[serde(default = "default_radius")]
        radius: f64,
    },
    Exponential {
        gamma: f64,
        c1: f64,
        c2: f64,
        d: usize,
        #[serde(default = "default_radius")]
        radius: f64,
    },
}

fn default_radius() -> f64 {
    1.0
}

impl EllipseDoc {
    pub fn build(&self) -> Result<EllipseSpec> {
        match self {
            EllipseDoc::Inline { eigenvalues, radius } => {
                EllipseSpec::new(eigenvalues.clone(), *radius)
            }
            EllipseDoc::Family(FamilyDoc::Polynomial { alpha, c, d, radius }) => {
                EllipseSpec::polynomial(*alpha, *c, *d, *radius)
            }
            EllipseDoc::Family(FamilyDoc::Exponential { gamma, c1, c2, d, radius }) => {
                EllipseSpec::exponential(*gamma, *c1, *c2, *d, *radius)
            }
        }
    }
}

/// Elliptical seminorm `sqrt(sum_j v_j^2 / mu_j)` over coordinates with
/// `mu_j > 0`; `+inf` if a zero-eigenvalue coordinate is nonzero.
pub fn elliptic_norm(e: &EllipseSpec, v: &[f64]) -> Result<f64> {
    e.check_dim(v)?;
    let mut s = 0.0;
    for (j, &vj) in v.iter().enumerate() {
        let mu = e.eigenvalue(j);
        if mu > 0.0 {
            s += vj * vj / mu;
        } else if vj != 0.0 {
            return Ok(f64::INFINITY);
        }
    }
    Ok(s.sqrt())
}

/// Membership test: `enorm(v) <= R * (1 + tol)`.
pub fn contains(e: &EllipseSpec, v: &[f64], tol: f64) -> Result<bool> {
    if tol < 0.0 {
        return Err(Error::invalid("membership tolerance must be >= 0"));
    }
    Ok(elliptic_norm(e, v)? <= e.radius() * (1.0 + tol))
}

/// Rescale an `R`-radius problem to unit radius: returns the ellipse with
/// `R = 1`, `center / R`, and `sigma / R`.  Any delta-valued quantity
/// computed on the rescaled problem, multiplied by `R`, recovers the
/// original-problem value.
pub fn rescale_problem(
    e: &EllipseSpec,
    center: &[f64],
    sigma: f64,
) -> Result<(EllipseSpec, PointVec, f64)> {
    e.check_dim(center)?;
    let r = e.radius();
    let unit = EllipseSpec::new(e.eigenvalues().to_vec(), 1.0)?;
    let scaled_center = center.iter().map(|&c| c / r).collect();
    Ok((unit, scaled_center, sigma / r))
}

/// A localized section: the re-centered ellipse `E - theta*` intersected
/// with the euclidean ball of radius `delta`.
#[derive(Debug, Clone, Serialize)]
pub struct LocalizedSection {
    ellipse: EllipseSpec,
    center: PointVec,
    delta: f64,
    eta: f64,
}

impl LocalizedSection {
    pub fn new(ellipse: EllipseSpec, center: PointVec, delta: f64, eta: f64) -> Result<Self> {
        ellipse.check_dim(&center)?;
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::invalid(format!("delta must be positive, got {delta}")));
        }
        if !(eta > 0.0 && eta < 0.1) {
            return Err(Error::invalid(format!("eta must lie in (0, 0.1), got {eta}")));
        }
        if !contains(&ellipse, &center, DEFAULT_MEMBERSHIP_TOL)? {
            return Err(Error::invalid("center violates the ellipse constraint"));
        }
        Ok(LocalizedSection { ellipse, center, delta, eta })
    }

    pub fn with_default_eta(ellipse: EllipseSpec, center: PointVec, delta: f64) -> Result<Self> {
        Self::new(ellipse, center, delta, DEFAULT_ETA)
    }

    pub fn ellipse(&self) -> &EllipseSpec {
        &self.ellipse
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn dim(&self) -> usize {
        self.ellipse.dim()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enorm_zero_vector() {
        let e = EllipseSpec::ball(2, 1.0).unwrap();
        assert_eq!(elliptic_norm(&e, &[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn enorm_single_active_coordinate() {
        let e = EllipseSpec::new(vec![1.0, 0.25], 1.0).unwrap();
        let n = elliptic_norm(&e, &[0.0, 0.5]).unwrap();
        assert!((n - 1.0).abs() < 1e-15);
    }

    #[test]
    fn enorm_zero_eigenvalue_coordinate() {
        let e = EllipseSpec::new(vec![1.0, 0.0], 1.0).unwrap();
        assert_eq!(elliptic_norm(&e, &[0.0, 0.1]).unwrap(), f64::INFINITY);
        assert_eq!(elliptic_norm(&e, &[0.3, 0.0]).unwrap(), 0.3);
    }

    #[test]
    fn enorm_dimension_mismatch() {
        let e = EllipseSpec::ball(2, 1.0).unwrap();
        assert!(elliptic_norm(&e, &[1.0]).is_err());
    }

    #[test]
    fn contains_boundary_and_outside() {
        let e = EllipseSpec::ball(2, 1.0).unwrap();
        assert!(contains(&e, &[0.6, 0.8], 0.0).unwrap());
        assert!(!contains(&e, &[0.6, 0.81], 0.0).unwrap());
    }

    #[test]
    fn contains_degenerate_coordinate_zero() {
        let e = EllipseSpec::new(vec![1.0, 0.0], 1.0).unwrap();
        assert!(contains(&e, &[0.5, 0.0], 0.0).unwrap());
        assert!(!contains(&e, &[0.5, 1e-3], 0.0).unwrap());
    }

    #[test]
    fn contains_monotone_in_tol() {
        let e = EllipseSpec::new(vec![1.0, 0.5, 0.1], 2.0).unwrap();
        let v = [1.1, 0.9, 0.3];
        let mut prev = false;
        for tol in [0.0, 1e-3, 1e-2, 0.1, 1.0, 10.0] {
            let c = contains(&e, &v, tol).unwrap();
            assert!(c || !prev, "contains must be monotone in tol");
            prev = c;
        }
    }

    #[test]
    fn rescale_matches_hand_computation() {
        let e = EllipseSpec::new(vec![1.0, 0.25], 2.0).unwrap();
        let (unit, center, sigma) = rescale_problem(&e, &[1.0, 0.0], 0.1).unwrap();
        assert_eq!(unit.radius(), 1.0);
        assert_eq!(center, vec![0.5, 0.0]);
        assert!((sigma - 0.05).abs() < 1e-16);

        let e1 = EllipseSpec::new(vec![1.0, 0.25], 1.0).unwrap();
        let (u1, c1, s1) = rescale_problem(&e1, &[0.3, 0.1], 0.7).unwrap();
        assert_eq!(u1, e1);
        assert_eq!(c1, vec![0.3, 0.1]);
        assert_eq!(s1, 0.7);

        let e2 = EllipseSpec::new(vec![1.0], 0.5).unwrap();
        let (_, c2, s2) = rescale_problem(&e2, &[0.25], 0.02).unwrap();
        assert_eq!(c2, vec![0.5]);
        assert!((s2 - 0.04).abs() < 1e-16);
    }

    #[test]
    fn rescale_round_trip() {
        let e = EllipseSpec::new(vec![2.0, 0.5, 0.125], 3.7).unwrap();
        let center = vec![0.9, -0.4, 0.2];
        let (_, c, s) = rescale_problem(&e, &center, 0.11).unwrap();
        for (orig, got) in center.iter().zip(c.iter().map(|x| x * e.radius())) {
            assert!((orig - got).abs() <= 1e-12 * orig.abs().max(1.0));
        }
        assert!((s * e.radius() - 0.11).abs() <= 1e-12 * 0.11);
    }

    #[test]
    fn json_inline_and_families() {
        let e = EllipseSpec::from_json(r#"{"eigenvalues":[1.0,0.25],"radius":2.0}"#).unwrap();
        assert_eq!(e.eigenvalues(), &[1.0, 0.25]);
        assert_eq!(e.radius(), 2.0);

        let p = EllipseSpec::from_json(r#"{"family":"polynomial","alpha":1.0,"c":1.0,"d":4}"#).unwrap();
        assert_eq!(p.radius(), 1.0);
        assert!((p.eigenvalue(2) - 1.0 / 9.0).abs() < 1e-15);

        let x = EllipseSpec::from_json(
            r#"{"family":"exponential","gamma":1.0,"c1":2.0,"c2":0.5,"d":3,"radius":1.5}"#,
        )
        .unwrap();
        assert!((x.eigenvalue(1) - 2.0 * (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(x.radius(), 1.5);
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(EllipseSpec::new(vec![], 1.0).is_err());
        assert!(EllipseSpec::new(vec![0.5, 1.0], 1.0).is_err());
        assert!(EllipseSpec::new(vec![1.0, -0.1], 1.0).is_err());
        assert!(EllipseSpec::new(vec![0.0, 0.0], 1.0).is_err());
        assert!(EllipseSpec::new(vec![1.0], 0.0).is_err());
    }

    #[test]
    fn section_validation() {
        let e = EllipseSpec::ball(2, 1.0).unwrap();
        assert!(LocalizedSection::new(e.clone(), vec![0.3, 0.0], 0.5, 1e-5).is_ok());
        assert!(LocalizedSection::new(e.clone(), vec![1.5, 0.0], 0.5, 1e-5).is_err());
        assert!(LocalizedSection::new(e.clone(), vec![0.0, 0.0], 0.5, 0.2).is_err());
        assert!(LocalizedSection::new(e, vec![0.0, 0.0], 0.0, 1e-5).is_err());
    }
}
