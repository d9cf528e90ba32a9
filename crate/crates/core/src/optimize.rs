//! Convex subproblem solvers: exact euclidean projection onto an ellipse,
//! linear maximization over the intersection of a shifted ellipse with a
//! centered ball, and a Dykstra feasibility oracle for that intersection.
//!
//! The inner maximization is solved in the dual.  With multipliers
//! `lambda_1` for `||Delta||^2 <= delta^2` and `lambda_2` for
//! `enorm(theta* + Delta)^2 <= R^2` (both in halved-quadratic form), the
//! Lagrangian maximizer is closed form,
//!
//! ```text
//! Delta_j = (mu_j w_j - lambda_2 theta*_j) / (lambda_1 mu_j + lambda_2),
//! ```
//!
//! each constraint residual is monotone in its own multiplier, and partial
//! minimization keeps the outer residual monotone, so nested bisection
//! converges deterministically.

use serde::Serialize;

use crate::ellipse::{contains, elliptic_norm, EllipseSpec, LocalizedSection, PointVec};
use crate::error::{Error, Result};
use crate::util::{dot, l2_dist, l2_norm};

const MAX_DOUBLINGS: usize = 1000;
const BISECT_ITERS: usize = 120;

/// Certificate for the linear maximization over a localized section.
#[derive(Debug, Clone, Serialize)]
pub struct DualCertificate {
    /// Multiplier for the ball constraint.
    pub lambda_ball: f64,
    /// Multiplier for the ellipse constraint.
    pub lambda_ellipse: f64,
    /// Feasible maximizer `Delta`.
    pub maximizer: PointVec,
    /// Objective at the maximizer.
    pub primal_value: f64,
    /// Certified dual minus primal value (clamped at 0).
    pub duality_gap: f64,
    /// Total residual evaluations across all bisections.
    pub iterations: usize,
}

/// Euclidean projection of `y` onto the ellipse; returns the projection and
/// the boundary multiplier `lambda` (0 when `y` is already inside).
///
/// On coordinates with `mu_j = 0` the projection is 0; elsewhere
/// `theta_j = y_j mu_j / (mu_j + lambda)` with the unique `lambda > 0`
/// putting the projection on the boundary.
pub fn project_ellipse(e: &EllipseSpec, y: &[f64]) -> Result<(PointVec, f64)> {
    e.check_dim(y)?;
    if contains(e, y, 0.0)? {
        return Ok((y.to_vec(), 0.0));
    }
    let r = e.radius();
    let r2 = r * r;
    // Zero eigenvalues are hard constraints; the remaining coordinates carry
    // the boundary equation sum_j mu_j y_j^2 / (mu_j + lambda)^2 = R^2.
    let en2 = |lam: f64| -> f64 {
        let mut s = 0.0;
        for (j, &yj) in y.iter().enumerate() {
            let mu = e.eigenvalue(j);
            if mu > 0.0 {
                let t = yj * mu / (mu + lam);
                s += t * t / mu;
            }
        }
        s
    };
    let restrict = |lam: f64| -> PointVec {
        y.iter()
            .enumerate()
            .map(|(j, &yj)| {
                let mu = e.eigenvalue(j);
                if mu > 0.0 {
                    yj * mu / (mu + lam)
                } else {
                    0.0
                }
            })
            .collect()
    };
    if en2(0.0) <= r2 {
        // Infeasibility came only from zero-eigenvalue coordinates.
        return Ok((restrict(0.0), 0.0));
    }
    let mut hi = 1.0;
    let mut grow = 0;
    while en2(hi) > r2 {
        hi *= 2.0;
        grow += 1;
        if grow > MAX_DOUBLINGS {
            return Err(Error::Numerical("projection bracket growth exceeded cap".into()));
        }
    }
    let mut lo = 0.0;
    for _ in 0..BISECT_ITERS {
        let mid = 0.5 * (lo + hi);
        let v = en2(mid);
        if (v.sqrt() - r).abs() <= 1e-12 * r {
            lo = mid;
            hi = mid;
            break;
        }
        if v > r2 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= hi * 1e-16 {
            break;
        }
    }
    let lam = 0.5 * (lo + hi);
    Ok((restrict(lam), lam))
}

/// Constrained least-squares estimate: projection of `theta* + sigma * noise`
/// onto the ellipse.  The noise vector is supplied by the caller.
pub fn lse(e: &EllipseSpec, theta_star: &[f64], sigma: f64, noise: &[f64]) -> Result<PointVec> {
    e.check_dim(theta_star)?;
    e.check_dim(noise)?;
    let y: Vec<f64> = theta_star
        .iter()
        .zip(noise)
        .map(|(t, n)| t + sigma * n)
        .collect();
    Ok(project_ellipse(e, &y)?.0)
}

/// Default gap tolerance for [`max_linear_over_intersection`].
pub fn default_gap_tol(w: &[f64], delta: f64) -> f64 {
    1e-8 * (l2_norm(w) * delta).max(1.0)
}

struct DualState<'a> {
    e: &'a EllipseSpec,
    theta: &'a [f64],
    w: &'a [f64],
    delta: f64,
    evals: usize,
    // Per-l1 scratch: b_j = l1 mu_j, c_j = mu_j (w_j + l1 theta_j)^2,
    // m_j = mu_j w_j, all over positive-eigenvalue coordinates only.
    b: Vec<f64>,
    c: Vec<f64>,
    m: Vec<f64>,
    t: Vec<f64>,
    // sum of mu_j w_j^2 over the same coordinates.
    s2: f64,
    warm_l2: f64,
}

impl<'a> DualState<'a> {
    fn new(e: &'a EllipseSpec, theta: &'a [f64], w: &'a [f64], delta: f64) -> Self {
        let mut m = Vec::new();
        let mut t = Vec::new();
        let mut s2 = 0.0;
        for (j, &wj) in w.iter().enumerate() {
            let mu = e.eigenvalue(j);
            if mu > 0.0 {
                m.push(mu * wj);
                t.push(theta[j]);
                s2 += mu * wj * wj;
            }
        }
        let n = m.len();
        DualState {
            e,
            theta,
            w,
            delta,
            evals: 0,
            b: vec![0.0; n],
            c: vec![0.0; n],
            m,
            t,
            s2,
            warm_l2: 1.0,
        }
    }

    fn set_l1(&mut self, l1: f64) {
        let mut idx = 0;
        for (j, &wj) in self.w.iter().enumerate() {
            let mu = self.e.eigenvalue(j);
            if mu > 0.0 {
                self.b[idx] = l1 * mu;
                let s = wj + l1 * self.theta[j];
                self.c[idx] = mu * s * s;
                idx += 1;
            }
        }
    }

    fn maximizer(&self, l1: f64, l2: f64) -> PointVec {
        self.w
            .iter()
            .enumerate()
            .map(|(j, &wj)| {
                let mu = self.e.eigenvalue(j);
                if mu > 0.0 {
                    (mu * wj - l2 * self.theta[j]) / (l1 * mu + l2)
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// enorm(theta + Delta)^2 - R^2 at the current l1, with derivative in l2;
    /// strictly decreasing in l2.
    fn ellipse_resid_deriv(&mut self, l2: f64) -> (f64, f64) {
        self.evals += 1;
        let r = self.e.radius();
        let mut s = 0.0;
        let mut ds = 0.0;
        for (bj, cj) in self.b.iter().zip(&self.c) {
            let den = bj + l2;
            let v = cj / (den * den);
            s += v;
            ds -= 2.0 * v / den;
        }
        (s - r * r, ds)
    }

    /// ||Delta||^2 - delta^2 at the current l1; strictly decreasing in l1.
    fn ball_resid(&mut self, l2: f64) -> f64 {
        self.evals += 1;
        let mut s = 0.0;
        for ((mj, tj), bj) in self.m.iter().zip(&self.t).zip(&self.b) {
            let d = (mj - l2 * tj) / (bj + l2);
            s += d * d;
        }
        s - self.delta * self.delta
    }

    /// Complementarity value of the ellipse multiplier at the current l1
    /// (which must have been set), by safeguarded Newton on the monotone
    /// residual, warm-started from the previous solve.
    fn inner_lambda2(&mut self, l1: f64) -> Result<f64> {
        if l1 == 0.0 {
            // Closed-form root of sum mu_j w_j^2 / l2^2 = R^2.
            let root = self.s2.sqrt() / self.e.radius();
            self.warm_l2 = root;
            return Ok(root);
        }
        if self.ellipse_resid_deriv(0.0).0 <= 0.0 {
            self.warm_l2 = 0.0;
            return Ok(0.0);
        }
        // Bracket [lo, hi] with resid(lo) > 0 >= resid(hi).
        let mut lo = 0.0f64;
        let mut hi = self.warm_l2.max(1e-12);
        let mut grow = 0;
        loop {
            let (v, _) = self.ellipse_resid_deriv(hi);
            if v <= 0.0 {
                break;
            }
            lo = hi;
            hi *= 4.0;
            grow += 1;
            if grow > MAX_DOUBLINGS {
                return Err(Error::Numerical("inner multiplier bracket growth exceeded cap".into()));
            }
        }
        let mut x = 0.5 * (lo + hi);
        for _ in 0..BISECT_ITERS {
            let (v, dv) = self.ellipse_resid_deriv(x);
            if v > 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            if v == 0.0 || hi - lo <= hi * 1e-15 {
                break;
            }
            let newton = x - v / dv;
            let next = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if (next - x).abs() <= x.abs() * 1e-16 {
                x = next;
                break;
            }
            x = next;
        }
        self.warm_l2 = x;
        Ok(x)
    }

    /// Outer residual: ball constraint at the partially minimized dual.
    fn outer_resid(&mut self, l1: f64) -> Result<(f64, f64)> {
        self.set_l1(l1);
        let l2 = self.inner_lambda2(l1)?;
        Ok((self.ball_resid(l2), l2))
    }

    /// Dual function value at (l1, l2).
    fn dual_value(&mut self, l1: f64, l2: f64) -> f64 {
        let d = self.maximizer(l1, l2);
        let val = dot(self.w, &d);
        let ball = dot(&d, &d) - self.delta * self.delta;
        let theta_plus: Vec<f64> = self.theta.iter().zip(&d).map(|(t, x)| t + x).collect();
        let en = elliptic_norm(self.e, &theta_plus).expect("dims checked");
        let r = self.e.radius();
        val - 0.5 * l1 * ball - 0.5 * l2 * (en * en - r * r)
    }
}

/// Supremum of `<w, Delta>` over the localized section, with a certified
/// primal-dual gap.
///
/// Fast paths: (a) ball-only active, `Delta = delta w / ||w||`; (b)
/// ellipse-only active, the support point of the shifted ellipse; otherwise
/// (c) nested monotone bisection over the two multipliers.
pub fn max_linear_over_intersection(
    section: &LocalizedSection,
    w: &[f64],
    gap_tol: f64,
) -> Result<DualCertificate> {
    let e = section.ellipse();
    e.check_dim(w)?;
    if !(gap_tol > 0.0) {
        return Err(Error::invalid("gap_tol must be positive"));
    }
    let theta = section.center();
    let delta = section.delta();
    let r = e.radius();
    let d = e.dim();

    // Degenerate direction: only zero-eigenvalue coordinates are excited.
    let w_active_norm2: f64 = w
        .iter()
        .enumerate()
        .map(|(j, &wj)| if e.eigenvalue(j) > 0.0 { wj * wj } else { 0.0 })
        .sum();
    if w_active_norm2 == 0.0 {
        return Ok(DualCertificate {
            lambda_ball: 0.0,
            lambda_ellipse: 0.0,
            maximizer: vec![0.0; d],
            primal_value: 0.0,
            duality_gap: 0.0,
            iterations: 0,
        });
    }
    let w_norm = w_active_norm2.sqrt();

    // (a) ball-only active.
    let cand: Vec<f64> = w
        .iter()
        .enumerate()
        .map(|(j, &wj)| {
            if e.eigenvalue(j) > 0.0 {
                delta * wj / w_norm
            } else {
                0.0
            }
        })
        .collect();
    let shifted: Vec<f64> = theta.iter().zip(&cand).map(|(t, x)| t + x).collect();
    if elliptic_norm(e, &shifted)? <= r * (1.0 + 1e-12) {
        return Ok(DualCertificate {
            lambda_ball: w_norm / delta,
            lambda_ellipse: 0.0,
            maximizer: cand.clone(),
            primal_value: dot(w, &cand),
            duality_gap: 0.0,
            iterations: 0,
        });
    }

    // (b) ellipse-only active: support point of the shifted ellipse.
    let s2: f64 = w
        .iter()
        .enumerate()
        .map(|(j, &wj)| {
            let mu = e.eigenvalue(j);
            if mu > 0.0 {
                mu * wj * wj
            } else {
                0.0
            }
        })
        .sum();
    let s = s2.sqrt();
    let support: Vec<f64> = w
        .iter()
        .enumerate()
        .map(|(j, &wj)| {
            let mu = e.eigenvalue(j);
            if mu > 0.0 {
                r * mu * wj / s - theta[j]
            } else {
                0.0
            }
        })
        .collect();
    if l2_norm(&support) <= delta * (1.0 + 1e-12) {
        return Ok(DualCertificate {
            lambda_ball: 0.0,
            lambda_ellipse: s / r,
            maximizer: support.clone(),
            primal_value: dot(w, &support),
            duality_gap: 0.0,
            iterations: 0,
        });
    }

    // (c) both constraints active.
    let mut st = DualState::new(e, theta, w, delta);

    let mut hi = (w_norm / delta).max(1.0);
    let mut f_hi;
    let mut grow = 0;
    loop {
        f_hi = st.outer_resid(hi)?.0;
        if f_hi <= 0.0 {
            break;
        }
        hi *= 2.0;
        grow += 1;
        if grow > MAX_DOUBLINGS {
            return Err(Error::NonConvergence {
                context: "outer multiplier bracket growth".into(),
                best_gap: f64::INFINITY,
            });
        }
    }
    // Bisection on the monotone outer residual; path (b) was rejected, so
    // the residual is positive at l1 = 0.  The residual flattens out past
    // the root, which rules out secant-type steps here.
    let _ = f_hi;
    let mut lo = 0.0;
    let mut x = 0.5 * (lo + hi);
    for _ in 0..BISECT_ITERS {
        let v = st.outer_resid(x)?.0;
        if v > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if v == 0.0 || hi - lo <= hi * 1e-15 {
            break;
        }
        x = 0.5 * (lo + hi);
    }
    let l1 = x;
    st.set_l1(l1);
    let l2 = st.inner_lambda2(l1)?;
    let mut delta_hat = st.maximizer(l1, l2);

    // Shrink to strict feasibility for an honest primal certificate.
    let norm = l2_norm(&delta_hat);
    if norm > delta {
        let t = delta / norm;
        for x in delta_hat.iter_mut() {
            *x *= t;
        }
    }
    let mut shifted: Vec<f64> = theta.iter().zip(&delta_hat).map(|(t, x)| t + x).collect();
    if elliptic_norm(e, &shifted)? > r {
        let mut t_lo = 0.0;
        let mut t_hi = 1.0;
        for _ in 0..80 {
            let t = 0.5 * (t_lo + t_hi);
            let probe: Vec<f64> = theta
                .iter()
                .zip(&delta_hat)
                .map(|(th, x)| th + t * x)
                .collect();
            if elliptic_norm(e, &probe)? > r {
                t_hi = t;
            } else {
                t_lo = t;
            }
        }
        for x in delta_hat.iter_mut() {
            *x *= t_lo;
        }
        shifted = theta.iter().zip(&delta_hat).map(|(t, x)| t + x).collect();
    }
    debug_assert!(l2_norm(&delta_hat) <= delta * (1.0 + 1e-8));
    debug_assert!(elliptic_norm(e, &shifted)? <= r * (1.0 + 1e-8));

    let primal = dot(w, &delta_hat);
    let dual = st.dual_value(l1, l2);
    let gap = (dual - primal).max(0.0);
    let iterations = st.evals;
    if gap > gap_tol {
        return Err(Error::NonConvergence {
            context: format!("dual gap above tolerance {gap_tol:.3e}"),
            best_gap: gap,
        });
    }
    Ok(DualCertificate {
        lambda_ball: l1,
        lambda_ellipse: l2,
        maximizer: delta_hat,
        primal_value: primal,
        duality_gap: gap,
        iterations,
    })
}

/// Dykstra alternating projections onto `B(delta)` and the shifted ellipse;
/// returns a point whose distance to both sets is below 1e-8.
pub fn dykstra_project_intersection(
    section: &LocalizedSection,
    y: &[f64],
    iters: usize,
) -> Result<PointVec> {
    let e = section.ellipse();
    e.check_dim(y)?;
    let theta = section.center();
    let delta = section.delta();
    let d = e.dim();

    let proj_ball = |v: &[f64]| -> PointVec {
        let n = l2_norm(v);
        if n <= delta {
            v.to_vec()
        } else {
            v.iter().map(|x| x * delta / n).collect()
        }
    };

    let mut x = y.to_vec();
    let mut p = vec![0.0; d];
    let mut q = vec![0.0; d];
    let mut resid = f64::INFINITY;
    for _ in 0..iters {
        let xp: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a + b).collect();
        let yk = proj_ball(&xp);
        p = xp.iter().zip(&yk).map(|(a, b)| a - b).collect();

        let yq: Vec<f64> = yk.iter().zip(&q).map(|(a, b)| a + b).collect();
        let shifted: Vec<f64> = theta.iter().zip(&yq).map(|(t, v)| t + v).collect();
        let (proj, _) = project_ellipse(e, &shifted)?;
        let xk: Vec<f64> = proj.iter().zip(theta).map(|(a, t)| a - t).collect();
        q = yq.iter().zip(&xk).map(|(a, b)| a - b).collect();

        resid = l2_dist(&yk, &xk);
        x = xk;
        if resid <= 1e-9 {
            return Ok(x);
        }
    }
    Err(Error::NonConvergence {
        context: "dykstra alternating projections".into(),
        best_gap: resid,
    })
}
