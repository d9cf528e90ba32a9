//! Kernel ingestion path: kernel functions on 1-D design points, Gram
//! matrices with the 1/n scaling, a self-contained cyclic Jacobi
//! eigensolver, and eigendecay classification.
//!
//! The Gram spectrum, sorted non-increasing, defines the ellipse the rest of
//! the crate consumes.  Positive semidefinite kernels can round off to
//! slightly negative eigenvalues; anything above `-1e-10 * max` is clipped
//! to zero (counted in the report), anything below is an error.

use serde::{Deserialize, Serialize};

use crate::ellipse::EllipseSpec;
use crate::error::{Error, Result};
use crate::util::{ols_slope, ols_r2};

/// Kernel functions used to build Gram matrices from 1-D points.
#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    Gaussian { bandwidth: f64 },
    Laplacian { bandwidth: f64 },
    Sobolev1,
}

impl KernelSpec {
    fn validate(&self) -> Result<()> {
        match self {
            KernelSpec::Gaussian { bandwidth } | KernelSpec::Laplacian { bandwidth } => {
                if !(*bandwidth > 0.0) {
                    return Err(Error::invalid("kernel bandwidth must be positive"));
                }
            }
            KernelSpec::Sobolev1 => {}
        }
        Ok(())
    }

    fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            KernelSpec::Gaussian { bandwidth } => {
                let z = (x - y) / bandwidth;
                (-0.5 * z * z).exp()
            }
            KernelSpec::Laplacian { bandwidth } => (-(x - y).abs() / bandwidth).exp(),
            KernelSpec::Sobolev1 => x.min(y),
        }
    }
}

/// Dense symmetric matrix, row-major full storage.
#[derive(Debug, Clone)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix { n, data: vec![0.0; n * n] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    fn off_diagonal_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    let v = self.get(i, j);
                    s += v * v;
                }
            }
        }
        s.sqrt()
    }

    fn symmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }
}

/// Gram matrix `K_ij = k(x_i, x_j) / n`.
pub fn gram_matrix(kernel: &KernelSpec, points: &[f64]) -> Result<SymMatrix> {
    kernel.validate()?;
    let n = points.len();
    if n == 0 {
        return Err(Error::invalid("gram matrix needs at least one point"));
    }
    if matches!(kernel, KernelSpec::Sobolev1) && points.iter().any(|&x| x < 0.0) {
        return Err(Error::invalid("sobolev1 kernel needs non-negative inputs"));
    }
    let mut k = SymMatrix::zeros(n);
    let scale = 1.0 / n as f64;
    for i in 0..n {
        for j in i..n {
            let v = kernel.eval(points[i], points[j]) * scale;
            k.set(i, j, v);
            k.set(j, i, v);
        }
    }
    Ok(k)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi sweeps, sorted
/// non-increasing.  Sweeps stop once the off-diagonal norm drops below
/// `1e-12` times the Frobenius norm.
pub fn sym_eigenvalues(matrix: &SymMatrix) -> Result<Vec<f64>> {
    let n = matrix.dim();
    let scale = matrix.data.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    if matrix.symmetry_defect() > 1e-12 * scale {
        return Err(Error::invalid("matrix is not symmetric within 1e-12"));
    }
    let mut a = matrix.clone();
    let norm = a.frobenius();
    if norm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let tol = 1e-12 * norm;
    let mut sweeps = 0;
    while a.off_diagonal_norm() > tol {
        sweeps += 1;
        if sweeps > 100 {
            return Err(Error::Numerical("jacobi sweeps exceeded cap".into()));
        }
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                a.set(p, p, app - t * apq);
                a.set(q, q, aqq + t * apq);
                a.set(p, q, 0.0);
                a.set(q, p, 0.0);
                for i in 0..n {
                    if i == p || i == q {
                        continue;
                    }
                    let aip = a.get(i, p);
                    let aiq = a.get(i, q);
                    a.set(i, p, c * aip - s * aiq);
                    a.set(p, i, c * aip - s * aiq);
                    a.set(i, q, s * aip + c * aiq);
                    a.set(q, i, s * aip + c * aiq);
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
    eig.sort_by(|x, y| y.total_cmp(x));
    Ok(eig)
}

/// Clip round-off negatives per the PSD tolerance policy; returns the
/// cleaned non-increasing sequence and the clip count.
fn clean_spectrum(eigenvalues: &[f64]) -> Result<(Vec<f64>, usize)> {
    if eigenvalues.is_empty() {
        return Err(Error::invalid("empty spectrum"));
    }
    let max = eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0) {
        return Err(Error::Numerical("spectrum has no positive eigenvalue".into()));
    }
    let mut clipped = 0;
    let mut out = Vec::with_capacity(eigenvalues.len());
    for &v in eigenvalues {
        if v < -1e-10 * max {
            return Err(Error::Numerical(format!(
                "eigenvalue {v:.3e} below the PSD round-off tolerance"
            )));
        }
        if v < 0.0 {
            clipped += 1;
            out.push(0.0);
        } else {
            out.push(v);
        }
    }
    out.sort_by(|x, y| y.total_cmp(x));
    Ok((out, clipped))
}

/// Ellipse whose eigenvalues are the Gram spectrum of the kernel on the
/// given points.
pub fn ellipse_from_kernel(kernel: &KernelSpec, points: &[f64], radius: f64) -> Result<EllipseSpec> {
    let gram = gram_matrix(kernel, points)?;
    let (eig, _) = clean_spectrum(&sym_eigenvalues(&gram)?)?;
    EllipseSpec::new(eig, radius)
}

/// Fitted eigendecay family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DecayFit {
    Polynomial { alpha: f64 },
    Exponential { gamma: f64 },
    Undetermined,
}

/// Eigendecay classification report.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<f64>,
    pub fitted: DecayFit,
    pub fit_residual: f64,
    pub poly_residual: f64,
    pub exp_residual: f64,
    pub n_clipped: usize,
    pub n_used: usize,
}

fn rmse(x: &[f64], y: &[f64]) -> f64 {
    let (slope, intercept, _) = ols_slope(x, y);
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - (intercept + slope * a);
            r * r
        })
        .sum();
    (sse / x.len() as f64).sqrt()
}

/// Classify the decay of a spectrum: fit `log mu_j` against `log j`
/// (polynomial, slope `-2 alpha`) and against `j^gamma` over a gamma grid
/// (exponential); the lower RMS log-residual wins, undetermined when the two
/// are within 10% of each other.
pub fn classify_decay(eigenvalues: &[f64]) -> Result<SpectrumReport> {
    let (eig, n_clipped) = clean_spectrum(eigenvalues)?;
    let max = eig[0];
    let usable: Vec<f64> = eig.iter().cloned().take_while(|&v| v > 1e-14 * max).collect();
    if usable.len() < 10 {
        return Err(Error::invalid(format!(
            "need at least 10 usable eigenvalues, got {}",
            usable.len()
        )));
    }
    let logs: Vec<f64> = usable.iter().map(|v| v.ln()).collect();
    let idx: Vec<f64> = (1..=usable.len()).map(|j| j as f64).collect();

    let log_idx: Vec<f64> = idx.iter().map(|j| j.ln()).collect();
    let (poly_slope, _, _) = ols_slope(&log_idx, &logs);
    let poly_residual = rmse(&log_idx, &logs);
    let alpha = -poly_slope / 2.0;

    let mut best_gamma = 0.0;
    let mut exp_residual = f64::INFINITY;
    let mut g = 0.10;
    while g <= 3.0 + 1e-9 {
        let xs: Vec<f64> = idx.iter().map(|j| j.powf(g)).collect();
        let r = rmse(&xs, &logs);
        if r < exp_residual {
            exp_residual = r;
            best_gamma = g;
        }
        g += 0.01;
    }

    let fitted = if (poly_residual - exp_residual).abs() <= 0.1 * poly_residual.max(exp_residual) {
        DecayFit::Undetermined
    } else if poly_residual < exp_residual {
        DecayFit::Polynomial { alpha }
    } else {
        DecayFit::Exponential { gamma: best_gamma }
    };
    Ok(SpectrumReport {
        eigenvalues: eig,
        fitted,
        fit_residual: poly_residual.min(exp_residual),
        poly_residual,
        exp_residual,
        n_clipped,
        n_used: usable.len(),
    })
}

/// Evenly spaced grid of `n` points on `[lo, hi]`, endpoints included.
pub fn uniform_grid(n: usize, lo: f64, hi: f64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::invalid("grid needs at least one point"));
    }
    if !(hi >= lo) {
        return Err(Error::invalid("grid needs hi >= lo"));
    }
    if n == 1 {
        return Ok(vec![0.5 * (lo + hi)]);
    }
    Ok((0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect())
}

/// R^2 of the polynomial log-log fit, exposed for acceptance diagnostics.
pub fn loglog_fit_r2(eigenvalues: &[f64]) -> Result<f64> {
    let (eig, _) = clean_spectrum(eigenvalues)?;
    let max = eig[0];
    let usable: Vec<f64> = eig.iter().cloned().take_while(|&v| v > 1e-14 * max).collect();
    let logs: Vec<f64> = usable.iter().map(|v| v.ln()).collect();
    let log_idx: Vec<f64> = (1..=usable.len()).map(|j| (j as f64).ln()).collect();
    Ok(ols_r2(&log_idx, &logs))
}
