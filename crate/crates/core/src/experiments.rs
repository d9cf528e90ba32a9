//! Seeded simulation harness: risk curves for the constrained least-squares
//! estimator, log-log slope fits, and the polynomial-decay risk-curve
//! reproduction at the center and at the first-coordinate spike.
//!
//! Everything is a pure function of `(config, base_seed)`: replicate `r` of
//! sigma index `s` draws its noise from the stream `(base_seed, s, r)`, and
//! aggregation always runs over the sorted replicate index, so results are
//! bit-identical at any parallelism level.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ellipse::{contains, EllipseDoc, EllipseSpec, PointVec, DEFAULT_MEMBERSHIP_TOL};
use crate::error::{Error, Result};
use crate::kernels::{ellipse_from_kernel, uniform_grid, KernelSpec};
use crate::optimize::lse;
use crate::stream::{normal_vector, stream_rng};
use crate::util::{l2_dist, mean_stderr, ols_slope};

/// Where the experiment ellipse comes from: an inline/family document or a
/// kernel Gram spectrum.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum EllipseSource {
    Kernel {
        kernel: KernelSpec,
        points: PointsSource,
        #[serde(default = "default_radius")]
        radius: f64,
    },
    Doc(EllipseDoc),
}

fn default_radius() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointsSource {
    Grid { n: usize, lo: f64, hi: f64 },
    Csv { path: PathBuf },
}

impl PointsSource {
    pub fn load(&self) -> Result<Vec<f64>> {
        match self {
            PointsSource::Grid { n, lo, hi } => uniform_grid(*n, *lo, *hi),
            PointsSource::Csv { path } => read_points_csv(path),
        }
    }
}

/// One-column CSV of design points; a non-numeric first line is treated as
/// a header.
pub fn read_points_csv(path: &PathBuf) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        match line.parse::<f64>() {
            Ok(v) => points.push(v),
            Err(_) if i == 0 => continue,
            Err(_) => {
                return Err(Error::Config(format!(
                    "line {} of {} is not a number: {line:?}",
                    i + 1,
                    path.display()
                )))
            }
        }
    }
    if points.is_empty() {
        return Err(Error::Config(format!("no points in {}", path.display())));
    }
    Ok(points)
}

impl EllipseSource {
    pub fn build(&self) -> Result<EllipseSpec> {
        match self {
            EllipseSource::Doc(doc) => doc.build(),
            EllipseSource::Kernel { kernel, points, radius } => {
                ellipse_from_kernel(kernel, &points.load()?, *radius)
            }
        }
    }
}

/// Center specification for an experiment.
#[derive(Debug, Clone, Default, Deserialize, Serialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum ThetaStarSpec {
    #[default]
    Zero,
    /// 1-based coordinate index.
    Spiked { coord: usize, magnitude: f64 },
    Explicit(Vec<f64>),
}

impl ThetaStarSpec {
    pub fn resolve(&self, dim: usize) -> Result<PointVec> {
        match self {
            ThetaStarSpec::Zero => Ok(vec![0.0; dim]),
            ThetaStarSpec::Spiked { coord, magnitude } => {
                if *coord == 0 || *coord > dim {
                    return Err(Error::Config(format!(
                        "spike coordinate {coord} out of range [1, {dim}]"
                    )));
                }
                let mut v = vec![0.0; dim];
                v[coord - 1] = *magnitude;
                Ok(v)
            }
            ThetaStarSpec::Explicit(v) => {
                if v.len() != dim {
                    return Err(Error::Config(format!(
                        "explicit center has length {}, ellipse dimension is {dim}",
                        v.len()
                    )));
                }
                Ok(v.clone())
            }
        }
    }
}

/// Risk-curve experiment configuration.
#[derive(Debug, Clone, Deserialize)]
pub struct ExperimentConfig {
    pub ellipse: EllipseSource,
    #[serde(default)]
    pub theta_star: ThetaStarSpec,
    pub sigma_grid: Vec<f64>,
    pub replicates: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be >= 1".into()));
        }
        if self.sigma_grid.is_empty() {
            return Err(Error::Config("sigma grid must be non-empty".into()));
        }
        for w in self.sigma_grid.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::Config("sigma grid must be strictly increasing".into()));
            }
        }
        if !self.sigma_grid.iter().all(|&s| s > 0.0) {
            return Err(Error::Config("sigma grid must be strictly positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RiskPoint {
    pub sigma: f64,
    pub sigma_sq: f64,
    pub mse_mean: f64,
    pub mse_stderr: f64,
    pub replicates: usize,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub stderr: f64,
}

/// Empirical risk curve with the fitted slope of `log10(mse)` against
/// `log10(1 / sigma^2)` (present once the grid has at least 4 points).
#[derive(Debug, Clone, Serialize)]
pub struct RiskCurve {
    pub points: Vec<RiskPoint>,
    pub slope: Option<SlopeFit>,
}

impl RiskCurve {
    /// CSV rows `sigma, sigma_sq, mse_mean, mse_stderr, replicates`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sigma,sigma_sq,mse_mean,mse_stderr,replicates\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                p.sigma, p.sigma_sq, p.mse_mean, p.mse_stderr, p.replicates
            ));
        }
        out
    }
}

/// Squared estimation errors of the LSE, one per replicate, at one noise
/// level.  Replicate `r` draws from the stream `(base_seed, sigma_index, r)`.
fn replicate_errors(
    e: &EllipseSpec,
    theta: &[f64],
    sigma: f64,
    sigma_index: usize,
    replicates: usize,
    base_seed: u64,
) -> Result<Vec<f64>> {
    (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(base_seed, &[sigma_index as u64, r as u64]);
            let noise = normal_vector(&mut rng, e.dim());
            let est = lse(e, theta, sigma, &noise).map_err(|err| {
                Error::Numerical(format!("sigma index {sigma_index}, replicate {r}: {err}"))
            })?;
            let d = l2_dist(&est, theta);
            Ok(d * d)
        })
        .collect()
}

/// Mean squared error of the LSE over the sigma grid; deterministic given
/// the config and its base seed.
pub fn run_risk_curve(config: &ExperimentConfig) -> Result<RiskCurve> {
    config.validate()?;
    let e = config.ellipse.build()?;
    let theta = config.theta_star.resolve(e.dim())?;
    if !contains(&e, &theta, DEFAULT_MEMBERSHIP_TOL)? {
        return Err(Error::Config("theta_star violates the ellipse constraint".into()));
    }
    let mut points = Vec::with_capacity(config.sigma_grid.len());
    for (si, &sigma) in config.sigma_grid.iter().enumerate() {
        let errs = replicate_errors(&e, &theta, sigma, si, config.replicates, config.base_seed)?;
        let (mean, stderr) = mean_stderr(&errs);
        points.push(RiskPoint {
            sigma,
            sigma_sq: sigma * sigma,
            mse_mean: mean,
            mse_stderr: stderr,
            replicates: config.replicates,
        });
    }
    let slope = if points.len() >= 4 && points.iter().all(|p| p.mse_mean > 0.0) {
        let curve = RiskCurve { points: points.clone(), slope: None };
        let (s, se) = fit_loglog_slope(&curve)?;
        Some(SlopeFit { slope: s, stderr: se })
    } else {
        None
    };
    Ok(RiskCurve { points, slope })
}

/// Ordinary least squares of `log10(mse)` on `log10(1 / sigma^2)`.
pub fn fit_loglog_slope(curve: &RiskCurve) -> Result<(f64, f64)> {
    if curve.points.len() < 4 {
        return Err(Error::invalid("slope fit needs at least 4 grid points"));
    }
    if let Some(bad) = curve.points.iter().find(|p| !(p.mse_mean > 0.0)) {
        return Err(Error::Numerical(format!(
            "non-positive mse {} at sigma {}",
            bad.mse_mean, bad.sigma
        )));
    }
    let x: Vec<f64> = curve
        .points
        .iter()
        .map(|p| (1.0 / (p.sigma * p.sigma)).log10())
        .collect();
    let y: Vec<f64> = curve.points.iter().map(|p| p.mse_mean.log10()).collect();
    let (slope, _, se) = ols_slope(&x, &y);
    Ok((slope, se))
}

/// Default sigma grid: `sigma^2 = 10^(-4 + 0.25 i)` for `i = 0..=12`.
pub fn default_sigma_grid() -> Vec<f64> {
    (0..13)
        .map(|i| 10.0f64.powf((-4.0 + 0.25 * i as f64) / 2.0))
        .collect()
}

pub const FIGURE3_DIM: usize = 500;
pub const FIGURE3_REPLICATES: usize = 200;
/// Accepted slope band for the centered curve (target -2/3).
pub const CENTERED_SLOPE_RANGE: (f64, f64) = (-0.73, -0.60);
/// Accepted slope band for the spiked curve (target -4/5).
pub const SPIKED_SLOPE_RANGE: (f64, f64) = (-0.86, -0.73);

/// Risk curves at the center and at the boundary spike `e_1` for the
/// `mu_j = j^-2` ellipse, with the slope verdicts.
#[derive(Debug, Clone, Serialize)]
pub struct Figure3Report {
    pub centered: RiskCurve,
    pub spiked: RiskCurve,
    pub centered_slope: SlopeFit,
    pub spiked_slope: SlopeFit,
    pub centered_slope_range: (f64, f64),
    pub spiked_slope_range: (f64, f64),
    pub centered_in_range: bool,
    pub spiked_in_range: bool,
    pub ordering_ok: bool,
    pub pass: bool,
    pub dim: usize,
    pub replicates: usize,
    pub base_seed: u64,
    pub note: String,
}

/// Run both risk curves on the default grid and fit their slopes.
pub fn reproduce_figure3(base_seed: u64) -> Result<Figure3Report> {
    let sigma_grid = default_sigma_grid();
    let ellipse = EllipseSpec::polynomial(1.0, 1.0, FIGURE3_DIM, 1.0)?;
    let run = |theta: ThetaStarSpec| -> Result<RiskCurve> {
        let config = ExperimentConfig {
            ellipse: EllipseSource::Doc(EllipseDoc::Inline {
                eigenvalues: ellipse.eigenvalues().to_vec(),
                radius: 1.0,
            }),
            theta_star: theta,
            sigma_grid: sigma_grid.clone(),
            replicates: FIGURE3_REPLICATES,
            base_seed,
            output: None,
        };
        run_risk_curve(&config)
    };
    let centered = run(ThetaStarSpec::Zero)?;
    let spiked = run(ThetaStarSpec::Spiked { coord: 1, magnitude: 1.0 })?;
    let (cs, cse) = fit_loglog_slope(&centered)?;
    let (ss, sse) = fit_loglog_slope(&spiked)?;
    let centered_in_range = (CENTERED_SLOPE_RANGE.0..=CENTERED_SLOPE_RANGE.1).contains(&cs);
    let spiked_in_range = (SPIKED_SLOPE_RANGE.0..=SPIKED_SLOPE_RANGE.1).contains(&ss);
    let ordering_ok = ss < cs;
    Ok(Figure3Report {
        centered,
        spiked,
        centered_slope: SlopeFit { slope: cs, stderr: cse },
        spiked_slope: SlopeFit { slope: ss, stderr: sse },
        centered_slope_range: CENTERED_SLOPE_RANGE,
        spiked_slope_range: SPIKED_SLOPE_RANGE,
        centered_in_range,
        spiked_in_range,
        ordering_ok,
        pass: centered_in_range && spiked_in_range && ordering_ok,
        dim: FIGURE3_DIM,
        replicates: FIGURE3_REPLICATES,
        base_seed,
        note: "spiked center sits on the ellipse boundary by construction; \
               sigma^2 grid 10^(-4 + 0.25 i), i = 0..=12"
            .into(),
    })
}

impl Figure3Report {
    /// Stacked CSV of both curves with a leading curve label column.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("curve,sigma,sigma_sq,mse_mean,mse_stderr,replicates\n");
        for (label, curve) in [("centered", &self.centered), ("spiked", &self.spiked)] {
            for p in &curve.points {
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    label, p.sigma, p.sigma_sq, p.mse_mean, p.mse_stderr, p.replicates
                ));
            }
        }
        out
    }

    /// Gnuplot-ready blocks of `log10_inv_sigma_sq  log10_mse`, one block
    /// per curve.
    pub fn to_plot_data(&self) -> String {
        let mut out = String::new();
        for (label, curve) in [("centered", &self.centered), ("spiked", &self.spiked)] {
            out.push_str(&format!("# {label}: log10_inv_sigma_sq  log10_mse\n"));
            for p in &curve.points {
                out.push_str(&format!(
                    "{}  {}\n",
                    (1.0 / p.sigma_sq).log10(),
                    p.mse_mean.log10()
                ));
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ball_config(d: usize, sigma_grid: Vec<f64>, replicates: usize, seed: u64) -> ExperimentConfig {
        ExperimentConfig {
            ellipse: EllipseSource::Doc(EllipseDoc::Inline {
                eigenvalues: vec![1.0; d],
                radius: 1.0,
            }),
            theta_star: ThetaStarSpec::Zero,
            sigma_grid,
            replicates,
            base_seed: seed,
            output: None,
        }
    }

    #[test]
    fn exact_power_law_slopes() {
        let mk = |expo: f64| RiskCurve {
            points: (1..=8)
                .map(|i| {
                    let sigma = 0.01 * 1.7f64.powi(i);
                    RiskPoint {
                        sigma,
                        sigma_sq: sigma * sigma,
                        mse_mean: (sigma * sigma).powf(expo),
                        mse_stderr: 0.0,
                        replicates: 1,
                    }
                })
                .collect(),
            slope: None,
        };
        let (s, se) = fit_loglog_slope(&mk(2.0 / 3.0)).unwrap();
        assert!((s + 2.0 / 3.0).abs() < 1e-12, "{s}");
        assert!(se < 1e-12);
        let (s, _) = fit_loglog_slope(&mk(4.0 / 5.0)).unwrap();
        assert!((s + 0.8).abs() < 1e-12, "{s}");
    }

    #[test]
    fn slope_fit_error_paths() {
        let mut curve = RiskCurve {
            points: (1..=3)
                .map(|i| RiskPoint {
                    sigma: i as f64,
                    sigma_sq: (i * i) as f64,
                    mse_mean: 1.0,
                    mse_stderr: 0.0,
                    replicates: 1,
                })
                .collect(),
            slope: None,
        };
        assert!(fit_loglog_slope(&curve).is_err(), "too few points");
        curve.points.push(RiskPoint {
            sigma: 4.0,
            sigma_sq: 16.0,
            mse_mean: 0.0,
            mse_stderr: 0.0,
            replicates: 1,
        });
        assert!(fit_loglog_slope(&curve).is_err(), "non-positive mse");
    }

    #[test]
    fn determinism_and_replicate_order_independence() {
        let config = ball_config(8, vec![0.05, 0.1, 0.2], 40, 99);
        let a = run_risk_curve(&config).unwrap();
        let b = run_risk_curve(&config).unwrap();
        for (p, q) in a.points.iter().zip(&b.points) {
            assert_eq!(p.mse_mean.to_bits(), q.mse_mean.to_bits());
            assert_eq!(p.mse_stderr.to_bits(), q.mse_stderr.to_bits());
        }

        // Serial recomputation through the same streams, aggregated in
        // replicate order, must match the parallel path bit for bit.
        let e = EllipseSpec::ball(8, 1.0).unwrap();
        let theta = vec![0.0; 8];
        for (si, &sigma) in config.sigma_grid.iter().enumerate() {
            let mut errs = Vec::new();
            for r in 0..40u64 {
                let mut rng = stream_rng(99, &[si as u64, r]);
                let noise = normal_vector(&mut rng, 8);
                let est = lse(&e, &theta, sigma, &noise).unwrap();
                let d = l2_dist(&est, &theta);
                errs.push(d * d);
            }
            let (mean, _) = mean_stderr(&errs);
            assert_eq!(mean.to_bits(), a.points[si].mse_mean.to_bits());
        }
    }

    #[test]
    fn ball_mse_matches_unprojected_risk() {
        let d = 20;
        let config = ball_config(d, vec![0.01], 200, 3);
        let curve = run_risk_curve(&config).unwrap();
        let p = &curve.points[0];
        let expect = 1e-4 * d as f64;
        assert!(
            (p.mse_mean - expect).abs() <= 3.0 * p.mse_stderr,
            "{} vs {expect} (se {})",
            p.mse_mean,
            p.mse_stderr
        );
    }

    #[test]
    fn tiny_sigma_row_vanishes() {
        let config = ball_config(5, vec![1e-9], 20, 0);
        let curve = run_risk_curve(&config).unwrap();
        assert!(curve.points[0].mse_mean < 1e-12);
    }

    #[test]
    fn mse_monotone_in_sigma_within_noise() {
        let d = 50;
        let e = EllipseSpec::polynomial(1.0, 1.0, d, 1.0).unwrap();
        let config = ExperimentConfig {
            ellipse: EllipseSource::Doc(EllipseDoc::Inline {
                eigenvalues: e.eigenvalues().to_vec(),
                radius: 1.0,
            }),
            theta_star: ThetaStarSpec::Zero,
            sigma_grid: default_sigma_grid(),
            replicates: 100,
            base_seed: 11,
            output: None,
        };
        let curve = run_risk_curve(&config).unwrap();
        for w in curve.points.windows(2) {
            let combined = (w[0].mse_stderr.powi(2) + w[1].mse_stderr.powi(2)).sqrt();
            assert!(
                w[1].mse_mean >= w[0].mse_mean - 2.0 * combined,
                "sigma {} -> {}",
                w[0].sigma,
                w[1].sigma
            );
        }
    }

    #[test]
    fn config_parsing_variants() {
        let json = r#"{
            "ellipse": {"family": "polynomial", "alpha": 1.0, "c": 1.0, "d": 10},
            "theta_star": {"spiked": {"coord": 1, "magnitude": 0.5}},
            "sigma_grid": [0.01, 0.02],
            "replicates": 5,
            "base_seed": 7
        }"#;
        let config: ExperimentConfig = serde_json::from_str(json).unwrap();
        config.validate().unwrap();
        let e = config.ellipse.build().unwrap();
        assert_eq!(e.dim(), 10);
        let theta = config.theta_star.resolve(10).unwrap();
        assert_eq!(theta[0], 0.5);
        assert!(theta[1..].iter().all(|&x| x == 0.0));

        let json_kernel = r#"{
            "ellipse": {"kernel": {"kind": "gaussian", "bandwidth": 0.5},
                        "points": {"grid": {"n": 20, "lo": -1.0, "hi": 1.0}},
                        "radius": 1.0},
            "sigma_grid": [0.1],
            "replicates": 2
        }"#;
        let config: ExperimentConfig = serde_json::from_str(json_kernel).unwrap();
        let e = config.ellipse.build().unwrap();
        assert_eq!(e.dim(), 20);
        assert_eq!(config.theta_star, ThetaStarSpec::Zero);

        let bad = r#"{
            "ellipse": {"eigenvalues": [1.0], "radius": 1.0},
            "sigma_grid": [0.2, 0.1],
            "replicates": 2
        }"#;
        let config: ExperimentConfig = serde_json::from_str(bad).unwrap();
        assert!(config.validate().is_err(), "unsorted grid");
    }

    #[test]
    fn theta_star_resolution_errors() {
        assert!(ThetaStarSpec::Spiked { coord: 0, magnitude: 1.0 }.resolve(3).is_err());
        assert!(ThetaStarSpec::Spiked { coord: 4, magnitude: 1.0 }.resolve(3).is_err());
        assert!(ThetaStarSpec::Explicit(vec![1.0, 2.0]).resolve(3).is_err());
    }

    #[test]
    fn risk_curve_csv_shape() {
        let config = ball_config(4, vec![0.1, 0.2], 3, 1);
        let curve = run_risk_curve(&config).unwrap();
        let csv = curve.to_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "sigma,sigma_sq,mse_mean,mse_stderr,replicates"
        );
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.lines().nth(1).unwrap().starts_with("0.1,"));
    }
}
