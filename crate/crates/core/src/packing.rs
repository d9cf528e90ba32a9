//! Empirical metric entropy of localized sections at small dimension:
//! rejection sampling of the section, greedy packing (a certified lower
//! bound on the packing number), and the entropy-vs-critical-dimension
//! report.

use rand::Rng;
use serde::Serialize;

use crate::ellipse::{contains, LocalizedSection, PointVec, DEFAULT_MEMBERSHIP_TOL};
use crate::error::{Error, Result};
use crate::stream::{normal_vector, stream_rng};
use crate::util::l2_dist;
use crate::widths::{critical_dimension_bounds, CriticalDimension};

/// Rejection sampling parameters degrade exponentially with dimension.
pub const MAX_SAMPLING_DIM: usize = 12;

/// Accepted sample of a localized section.
#[derive(Debug, Clone, Serialize)]
pub struct SectionSample {
    pub points: Vec<PointVec>,
    pub acceptance_rate: f64,
    pub requested: usize,
}

/// Uniform candidates in the delta-ball around the center, accepted iff the
/// shifted point stays in the ellipse.  Candidate `i` draws from the stream
/// `(seed, i)`.
pub fn sample_from_section(section: &LocalizedSection, n: usize, seed: u64) -> Result<SectionSample> {
    let d = section.dim();
    if d > MAX_SAMPLING_DIM {
        return Err(Error::invalid(format!(
            "rejection sampling is limited to dimension {MAX_SAMPLING_DIM}, got {d}"
        )));
    }
    if n == 0 {
        return Err(Error::invalid("sample size must be >= 1"));
    }
    let e = section.ellipse();
    let theta = section.center();
    let delta = section.delta();
    let mut points = Vec::new();
    for i in 0..n {
        let mut rng = stream_rng(seed, &[i as u64]);
        let dir = normal_vector(&mut rng, d);
        let norm = crate::util::l2_norm(&dir);
        let radius = delta * rng.random::<f64>().powf(1.0 / d as f64);
        let cand: Vec<f64> = if norm == 0.0 {
            vec![0.0; d]
        } else {
            dir.iter().map(|x| x * radius / norm).collect()
        };
        let shifted: Vec<f64> = theta.iter().zip(&cand).map(|(t, x)| t + x).collect();
        if contains(e, &shifted, DEFAULT_MEMBERSHIP_TOL)? {
            points.push(cand);
        }
    }
    let acceptance_rate = points.len() as f64 / n as f64;
    if acceptance_rate < 1e-4 {
        return Err(Error::Numerical(format!(
            "acceptance rate {acceptance_rate:.2e} below 1e-4; reduce the dimension or enlarge the delta budget"
        )));
    }
    Ok(SectionSample { points, acceptance_rate, requested: n })
}

/// Greedy packing certificate: `count` points pairwise more than `epsilon`
/// apart, a lower bound on the packing number of the candidate hull.
#[derive(Debug, Clone, Serialize)]
pub struct PackingReport {
    pub epsilon: f64,
    pub count: usize,
    pub n_candidates: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_reference: Option<CriticalDimension>,
}

/// First-fit greedy packing over the candidates, sorted lexicographically
/// for reproducibility; every kept pair is re-verified afterwards.
pub fn greedy_packing(points: &[PointVec], epsilon: f64) -> Result<PackingReport> {
    if !(epsilon > 0.0) {
        return Err(Error::invalid("epsilon must be positive"));
    }
    if points.is_empty() {
        return Err(Error::invalid("empty candidate list"));
    }
    let mut sorted: Vec<&PointVec> = points.iter().collect();
    sorted.sort_by(|a, b| {
        for (x, y) in a.iter().zip(b.iter()) {
            match x.total_cmp(y) {
                std::cmp::Ordering::Equal => continue,
                other => return other,
            }
        }
        a.len().cmp(&b.len())
    });
    let mut kept: Vec<&PointVec> = Vec::new();
    for cand in sorted {
        if kept.iter().all(|p| l2_dist(p, cand) > epsilon) {
            kept.push(cand);
        }
    }
    for (i, p) in kept.iter().enumerate() {
        for q in &kept[i + 1..] {
            assert!(l2_dist(p, q) > epsilon, "packing certificate violated");
        }
    }
    Ok(PackingReport {
        epsilon,
        count: kept.len(),
        n_candidates: points.len(),
        k_reference: None,
    })
}

/// Empirical entropy-vs-dimension comparison for a localized section.
#[derive(Debug, Clone, Serialize)]
pub struct EntropySandwichReport {
    pub delta: f64,
    pub epsilon: f64,
    pub packing: PackingReport,
    pub log_count: f64,
    pub k_lower: usize,
    pub k_upper: usize,
    /// Empirical ratios `log_count / k`; the universal constants relating
    /// packing entropy to the critical dimension are not numeric, so these
    /// are recorded, not asserted.
    pub log_count_over_k_lower: f64,
    pub log_count_over_k_upper: f64,
    pub acceptance_rate: f64,
    pub n_sampled: usize,
}

/// Sample the section, pack greedily at `epsilon` (default `delta / 2`),
/// and report the packing entropy next to the critical-dimension bounds.
pub fn entropy_sandwich_report(
    section: &LocalizedSection,
    epsilon: Option<f64>,
    n: usize,
    seed: u64,
) -> Result<EntropySandwichReport> {
    let delta = section.delta();
    let epsilon = epsilon.unwrap_or(delta / 2.0);
    let k = critical_dimension_bounds(
        section.ellipse(),
        section.center(),
        delta,
        section.eta(),
    )?;
    let sample = sample_from_section(section, n, seed)?;
    let mut packing = greedy_packing(&sample.points, epsilon)?;
    packing.k_reference = Some(k);
    let log_count = (packing.count as f64).ln();
    debug_assert!(log_count >= 0.0);
    Ok(EntropySandwichReport {
        delta,
        epsilon,
        log_count,
        k_lower: k.lower,
        k_upper: k.upper,
        log_count_over_k_lower: log_count / k.lower as f64,
        log_count_over_k_upper: log_count / k.upper as f64,
        acceptance_rate: sample.acceptance_rate,
        n_sampled: sample.points.len(),
        packing,
    })
}
