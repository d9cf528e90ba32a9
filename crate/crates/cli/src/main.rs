//! Command-line front end: localized width reports, critical dimensions and
//! radii, risk curves, kernel spectra, packing and regularity reports.
//!
//! Exit codes: 0 success, 2 configuration error, 4 acceptance failure for
//! `figure3 --check`, 3 numerical failure.

// Parameter checks use `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use locwidth::ellipse::{EllipseSpec, LocalizedSection, DEFAULT_ETA};
use locwidth::error::Error;
use locwidth::experiments::{
    reproduce_figure3, run_risk_curve, EllipseSource, ExperimentConfig, PointsSource,
    ThetaStarSpec,
};
use locwidth::kernels::{classify_decay, ellipse_from_kernel, KernelSpec};
use locwidth::optimize::project_ellipse;
use locwidth::packing::entropy_sandwich_report;
use locwidth::rates::{minimax_bounds, solve_fixed_point};
use locwidth::widths::{critical_dimension_bounds, gaussian_width_mc, phi, regularity_check};

#[derive(Parser)]
#[command(name = "locwidth", version, about = "Localized complexity measures for ellipses")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Euclidean projection of a point onto an ellipse.
    Project(CommonArgs),
    /// Monte-Carlo localized Gaussian width with analytic envelopes.
    Width(CommonArgs),
    /// Critical dimension (exact at the center, bounds elsewhere).
    Kdim(CommonArgs),
    /// Boundary-proximity map over a delta grid.
    Phi(CommonArgs),
    /// Critical radius from the fixed-point equation.
    FixedPoint(CommonArgs),
    /// Minimax risk bounds at the center.
    Minimax(CommonArgs),
    /// Empirical risk curve of the constrained least-squares estimator.
    RiskCurve(CommonArgs),
    /// Risk curves at the center and the boundary spike, with slope verdicts.
    Figure3 {
        #[command(flatten)]
        common: CommonArgs,
        /// Exit with code 4 when a slope leaves its accepted band.
        #[arg(long)]
        check: bool,
    },
    /// Gram spectrum of a kernel on design points, with decay classification.
    KernelSpectrum(CommonArgs),
    /// Greedy packing entropy of a localized section.
    Packing(CommonArgs),
    /// Regularity check of the feasible tail against delta^2 k.
    Regularity(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the seed from the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output path (stdout when omitted; file prefix for figure3).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

fn default_eta() -> f64 {
    DEFAULT_ETA
}

fn default_c_lower() -> f64 {
    1.0
}

fn default_radius() -> f64 {
    1.0
}

fn default_samples() -> usize {
    2000
}

fn default_candidates() -> usize {
    5000
}

fn default_reg_c() -> f64 {
    4.0
}

#[derive(Deserialize)]
struct ProjectConfig {
    ellipse: EllipseSource,
    y: Vec<f64>,
}

#[derive(Deserialize)]
struct WidthConfig {
    ellipse: EllipseSource,
    #[serde(default)]
    theta_star: ThetaStarSpec,
    delta: f64,
    #[serde(default = "default_eta")]
    eta: f64,
    #[serde(default = "default_samples")]
    samples: usize,
    #[serde(default)]
    seed: u64,
}

#[derive(Deserialize)]
struct KdimConfig {
    ellipse: EllipseSource,
    #[serde(default)]
    theta_star: ThetaStarSpec,
    delta: f64,
    #[serde(default = "default_eta")]
    eta: f64,
}

#[derive(Deserialize)]
struct PhiConfig {
    ellipse: EllipseSource,
    theta_star: ThetaStarSpec,
    #[serde(default)]
    delta: Option<f64>,
    #[serde(default)]
    deltas: Option<Vec<f64>>,
    #[serde(default = "default_eta")]
    eta: f64,
}

#[derive(Deserialize)]
struct FixedPointConfig {
    ellipse: EllipseSource,
    #[serde(default)]
    theta_star: ThetaStarSpec,
    sigma: f64,
    #[serde(default = "default_c_lower")]
    c_lower: f64,
    #[serde(default = "default_eta")]
    eta: f64,
}

#[derive(Deserialize)]
struct MinimaxConfig {
    ellipse: EllipseSource,
    sigma: f64,
    #[serde(default = "default_c_lower")]
    c_lower: f64,
    #[serde(default = "default_eta")]
    eta: f64,
}

#[derive(Deserialize, Default)]
struct Figure3Config {
    #[serde(default)]
    base_seed: u64,
}

#[derive(Deserialize)]
struct KernelSpectrumConfig {
    kernel: KernelSpec,
    points: PointsSource,
    #[serde(default = "default_radius")]
    radius: f64,
}

#[derive(Deserialize)]
struct PackingConfig {
    ellipse: EllipseSource,
    #[serde(default)]
    theta_star: ThetaStarSpec,
    delta: f64,
    #[serde(default = "default_eta")]
    eta: f64,
    #[serde(default)]
    epsilon: Option<f64>,
    #[serde(default = "default_candidates")]
    candidates: usize,
    #[serde(default)]
    seed: u64,
}

#[derive(Deserialize)]
struct LogGrid {
    lo: f64,
    hi: f64,
    n: usize,
}

#[derive(Deserialize)]
struct RegularityConfig {
    ellipse: EllipseSource,
    #[serde(default)]
    theta_star: ThetaStarSpec,
    #[serde(default)]
    delta_grid: Option<Vec<f64>>,
    #[serde(default)]
    log_grid: Option<LogGrid>,
    #[serde(default = "default_reg_c")]
    c: f64,
    #[serde(default = "default_eta")]
    eta: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_)
        | Error::Json(_)
        | Error::Io(_)
        | Error::InvalidParam(_)
        | Error::DimensionMismatch { .. }
        | Error::UnsupportedCenter(_) => 2,
        Error::Numerical(_) | Error::NonConvergence { .. } | Error::NoFixedPoint { .. } => 3,
    }
}

fn load_config<T: serde::de::DeserializeOwned>(path: &Option<PathBuf>) -> Result<T, Error> {
    let Some(path) = path else {
        return Err(Error::Config("missing --config <path>".into()));
    };
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn emit(args: &CommonArgs, json: String, csv: String) -> Result<(), Error> {
    let body = match args.format {
        Format::Json => json,
        Format::Csv => csv,
    };
    match &args.out {
        Some(path) => std::fs::write(path, body)?,
        None => print!("{body}"),
    }
    Ok(())
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, Error> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn build_center(e: &EllipseSpec, spec: &ThetaStarSpec) -> Result<Vec<f64>, Error> {
    spec.resolve(e.dim())
}

fn run(command: Command) -> Result<u8, Error> {
    match command {
        Command::Project(args) => {
            let config: ProjectConfig = load_config(&args.config)?;
            let e = config.ellipse.build()?;
            let (theta_hat, lambda) = project_ellipse(&e, &config.y)?;
            let json = to_json(&serde_json::json!({
                "theta_hat": theta_hat,
                "lambda": lambda,
            }))?;
            let mut csv = String::from("j,theta_hat,lambda\n");
            for (j, v) in theta_hat.iter().enumerate() {
                csv.push_str(&format!("{},{},{}\n", j + 1, v, lambda));
            }
            emit(&args, json, csv)?;
            Ok(0)
        }
        Command::Width(args) => {
            let config: WidthConfig = load_config(&args.config)?;
            let e = config.ellipse.build()?;
            let theta = build_center(&e, &config.theta_star)?;
            let section = LocalizedSection::new(e, theta, config.delta, config.eta)?;
            let seed = args.seed.unwrap_or(config.seed);
            let est = gaussian_width_mc(&section, config.samples, seed)?;
            let json = to_json(&est)?;
            let csv = format!(
                "delta,mc_mean,mc_stderr,n_samples,lower_envelope,upper_envelope,k\n{},{},{},{},{},{},{}\n",
                config.delta,
                est.mc_mean,
                est.mc_stderr,
                est.n_samples,
                est.lower_envelope,
                est.upper_envelope,
                est.k_used.k
            );
            emit(&args, json, csv)?;
            Ok(0)
        }
        Command::Kdim(args) => {
            let config: KdimConfig = load_config(&args.config)?;
            let e = config.ellipse.build()?;
            let theta = build_center(&e, &config.theta_star)?;
            let k = critical_dimension_bounds(&e, &theta, config.delta, config.eta)?;
            let json = to_json(&k)?;
            let csv = format!(
                "delta,k,exact,lower,upper\n{},{},{},{},{}\n",
                config.delta, k.k, k.exact, k.lower, k.upper
            );
            emit(&args, json, csv)?;
            Ok(0)
        }
        Command::Phi(args) => {
            let config: PhiConfig = load_config(&args.config)?;
            let e = config.ellipse.build()?;
            let theta = build_center(&e, &config.theta_star)?;
            let mut deltas = config.deltas.unwrap_or_default();
            if let Some(d) = config.delta {
                deltas.push(d);
            }
            if deltas.is_empty() {
                return Err(Error::Config("phi needs `delta` or `deltas`".into()));
            }
            let mut rows = Vec::with_capacity(deltas.len());
            for &delta in &deltas {
                rows.push(serde_json::json!({
                    "delta": delta,
                    "phi": phi(&e, &theta, delta, config.eta)?,
                }));
            }
            let json = to_json(&rows)?;
            let mut csv = String::from("delta,phi\n");
            for row in &rows {
                csv.push_str(&format!("{},{}\n", row["delta"], row["phi"]));
            }
            emit(&args, json, csv)?;
            Ok(0)
        }
        Command::FixedPoint(args) => {
            let config: FixedPointConfig = load_config(&args.config)?;
            let e = config.ellipse.build()?;
            let theta = build_center(&e, &config.theta_star)?;
            let fp = solve_fixed_point(&e, &theta, config.sigma, config.c_lower, config.eta)?;
            let json = to_json(&fp)?;
            let csv = format!(
                "sigma,delta_n,k,k_lower,k_upper,c_lower,iterations,bracket_residual\n{},{},{},{},{},{},{},{}\n",
                config.sigma,
                fp.delta_n,
                fp.k_at_delta.k,
                fp.k_at_delta.lower,
                fp.k_at_delta.upper,
                fp.c_lower,
                fp.iterations,
                fp.bracket_residual
            );
            emit(&args, json, csv)?;
            Ok(0)
        }
        Command::Minimax(args) => {
            let config: MinimaxConfig = load_config(&args.config)?;
            let e = config.ellipse.build()?;
            let b = minimax_bounds(&e, config.sigma, config.c_lower, config.eta)?;
            let json = to_json(&b)?;
            let csv = format!(
                "sigma,lower,upper,k_at_delta_n,k_at_half_delta_n,delta_n\n{},{},{},{},{},{}\n",
                config.sigma, b.lower, b.upper, b.k_at_delta_n, b.k_at_half_delta_n, b.delta_n
            );
            emit(&args, json, csv)?;
            Ok(0)
        }
        Command::RiskCurve(args) => {
            let mut config: ExperimentConfig = load_config(&args.config)?;
            if let Some(seed) = args.seed {
                config.base_seed = seed;
            }
            let curve = run_risk_curve(&config)?;
            let json = to_json(&curve)?;
            let csv = curve.to_csv();
            let args = CommonArgs {
                out: args.out.clone().or(config.output.clone()),
                ..args
            };
            emit(&args, json, csv)?;
            Ok(0)
        }
        Command::Figure3 { common, check } => {
            let config: Figure3Config = match &common.config {
                Some(_) => load_config(&common.config)?,
                None => Figure3Config::default(),
            };
            let seed = common.seed.unwrap_or(config.base_seed);
            let report = reproduce_figure3(seed)?;
            let prefix = common
                .out
                .clone()
                .unwrap_or_else(|| PathBuf::from("figure3"));
            let stem = prefix.to_string_lossy().to_string();
            std::fs::write(format!("{stem}.csv"), report.to_csv())?;
            std::fs::write(format!("{stem}.dat"), report.to_plot_data())?;
            std::fs::write(format!("{stem}.json"), to_json(&report)?)?;
            println!(
                "centered slope {:.4} (accepted band [{}, {}]): {}",
                report.centered_slope.slope,
                report.centered_slope_range.0,
                report.centered_slope_range.1,
                if report.centered_in_range { "ok" } else { "out of band" }
            );
            println!(
                "spiked slope {:.4} (accepted band [{}, {}]): {}",
                report.spiked_slope.slope,
                report.spiked_slope_range.0,
                report.spiked_slope_range.1,
                if report.spiked_in_range { "ok" } else { "out of band" }
            );
            println!(
                "spiked steeper than centered: {}",
                if report.ordering_ok { "ok" } else { "violated" }
            );
            println!("wrote {stem}.csv, {stem}.dat, {stem}.json");
            if check && !report.pass {
                eprintln!("figure3 acceptance failed");
                return Ok(4);
            }
            Ok(0)
        }
        Command::KernelSpectrum(args) => {
            let config: KernelSpectrumConfig = load_config(&args.config)?;
            let points = config.points.load()?;
            let e = ellipse_from_kernel(&config.kernel, &points, config.radius)?;
            let report = classify_decay(e.eigenvalues())?;
            let json = to_json(&report)?;
            let (family, parameter) = match report.fitted {
                locwidth::kernels::DecayFit::Polynomial { alpha } => ("polynomial", alpha),
                locwidth::kernels::DecayFit::Exponential { gamma } => ("exponential", gamma),
                locwidth::kernels::DecayFit::Undetermined => ("undetermined", f64::NAN),
            };
            let mut csv = String::from("j,eigenvalue,family,parameter,fit_residual\n");
            for (j, v) in report.eigenvalues.iter().enumerate() {
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    j + 1,
                    v,
                    family,
                    parameter,
                    report.fit_residual
                ));
            }
            emit(&args, json, csv)?;
            Ok(0)
        }
        Command::Packing(args) => {
            let config: PackingConfig = load_config(&args.config)?;
            let e = config.ellipse.build()?;
            let theta = build_center(&e, &config.theta_star)?;
            let section = LocalizedSection::new(e, theta, config.delta, config.eta)?;
            let seed = args.seed.unwrap_or(config.seed);
            let report =
                entropy_sandwich_report(&section, config.epsilon, config.candidates, seed)?;
            let json = to_json(&report)?;
            let csv = format!(
                "delta,epsilon,count,n_candidates,log_count,k_lower,k_upper,acceptance_rate\n{},{},{},{},{},{},{},{}\n",
                report.delta,
                report.epsilon,
                report.packing.count,
                report.packing.n_candidates,
                report.log_count,
                report.k_lower,
                report.k_upper,
                report.acceptance_rate
            );
            emit(&args, json, csv)?;
            Ok(0)
        }
        Command::Regularity(args) => {
            let config: RegularityConfig = load_config(&args.config)?;
            let e = config.ellipse.build()?;
            let theta = build_center(&e, &config.theta_star)?;
            let grid = match (&config.delta_grid, &config.log_grid) {
                (Some(g), _) => g.clone(),
                (None, Some(lg)) => {
                    if lg.n < 2 || !(lg.lo > 0.0) || !(lg.hi > lg.lo) {
                        return Err(Error::Config("log_grid needs 0 < lo < hi and n >= 2".into()));
                    }
                    (0..lg.n)
                        .map(|i| lg.lo * (lg.hi / lg.lo).powf(i as f64 / (lg.n - 1) as f64))
                        .collect()
                }
                (None, None) => {
                    return Err(Error::Config("regularity needs `delta_grid` or `log_grid`".into()))
                }
            };
            let report = regularity_check(&e, &theta, &grid, config.c, config.eta)?;
            let json = to_json(&report)?;
            let mut csv = String::from("delta,k,tail_sum,ratio,pass,overall_pass\n");
            for row in &report.rows {
                csv.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    row.delta, row.k, row.tail_sum, row.ratio, row.pass, report.pass
                ));
            }
            emit(&args, json, csv)?;
            Ok(0)
        }
    }
}
