//! Small shared vector helpers.

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn l2_norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

pub(crate) fn l2_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Sample mean and standard error of the mean; stderr is 0 for n = 1.
pub(crate) fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    assert!(n >= 1);
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Ordinary least squares of y on x: returns (slope, intercept, slope stderr).
/// Slope stderr is 0 when the fit is exact or n == 2.
pub(crate) fn ols_slope(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len();
    assert!(n >= 2 && y.len() == n);
    let xm = x.iter().sum::<f64>() / n as f64;
    let ym = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - xm) * (v - xm)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - xm) * (b - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    if n == 2 {
        return (slope, intercept, 0.0);
    }
    let ssr: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - (intercept + slope * a);
            r * r
        })
        .sum();
    let se = (ssr / (n - 2) as f64 / sxx).sqrt();
    (slope, intercept, se)
}

/// Coefficient of determination R^2 for the OLS fit of y on x.
pub(crate) fn ols_r2(x: &[f64], y: &[f64]) -> f64 {
    let (slope, intercept, _) = ols_slope(x, y);
    let ym = y.iter().sum::<f64>() / y.len() as f64;
    let sst: f64 = y.iter().map(|v| (v - ym) * (v - ym)).sum();
    let ssr: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - (intercept + slope * a);
            r * r
        })
        .sum();
    if sst == 0.0 {
        1.0
    } else {
        1.0 - ssr / sst
    }
}
