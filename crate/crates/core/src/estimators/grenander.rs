//! Normal-null scale from central statistics followed by a Grenander
//! estimate of the (decreasing) p-value density.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::Estimate;
use crate::model::PVALUE_FLOOR;
use crate::numeric::optimize::golden_section;
use crate::numeric::{quantile_sorted, sorted_copy};

const MIN_STATISTICS: usize = 10;
const FRACTION_STEP: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffMethod {
    /// Iterate: central fraction ← estimated π₀.
    Fndr,
    /// Fixed central fraction `pct0`.
    Pct0,
}

impl CutoffMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            CutoffMethod::Fndr => "fndr",
            CutoffMethod::Pct0 => "pct0",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrenanderParams {
    pub cutoff_method: CutoffMethod,
    /// Central fraction of `|u|` used for the null scale under `Pct0`.
    pub pct0: f64,
    pub fndr_iterations: usize,
}

impl Default for GrenanderParams {
    fn default() -> Self {
        Self {
            cutoff_method: CutoffMethod::Fndr,
            pct0: 0.75,
            fndr_iterations: 3,
        }
    }
}

/// Least concave majorant of an empirical CDF on `[0, 1]`; its left
/// derivative is the Grenander density.
#[derive(Debug, Clone, PartialEq)]
pub struct GrenanderDensity {
    /// Hull vertices, starting at `(0, 0)` and ending at `(1, 1)`.
    knots: Vec<(f64, f64)>,
}

impl GrenanderDensity {
    /// Left derivative of the majorant at `x ∈ (0, 1]`; the right derivative
    /// at 0.
    pub fn eval(&self, x: f64) -> f64 {
        let seg = self
            .knots
            .partition_point(|&(kx, _)| kx < x)
            .clamp(1, self.knots.len() - 1);
        let (x0, y0) = self.knots[seg - 1];
        let (x1, y1) = self.knots[seg];
        (y1 - y0) / (x1 - x0)
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }
}

/// Grenander estimate of the density of `p` (values in `[0, 1]`).
pub fn grenander_density(p: &[f64]) -> Result<GrenanderDensity, String> {
    if p.is_empty() {
        return Err("no p-values".into());
    }
    if p.iter().any(|x| !(0.0..=1.0).contains(x)) {
        return Err("p-values must lie in [0, 1]".into());
    }
    let sorted = sorted_copy(p);
    let n = sorted.len() as f64;
    let mut points = vec![(0.0, 0.0)];
    let mut i = 0;
    while i < sorted.len() {
        let x = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == x {
            j += 1;
        }
        if x > 0.0 {
            points.push((x, j as f64 / n));
        } else {
            points[0].1 = j as f64 / n;
        }
        i = j;
    }
    if points.len() < 3 && sorted[0] == sorted[sorted.len() - 1] {
        return Err("degenerate empirical CDF: a single repeated p-value".into());
    }
    if points.last().unwrap().0 < 1.0 {
        points.push((1.0, 1.0));
    }
    // Upper hull by monotone chain.
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(points.len());
    for pt in points {
        while hull.len() >= 2 {
            let (ax, ay) = hull[hull.len() - 2];
            let (bx, by) = hull[hull.len() - 1];
            // Drop b when it lies on or below the chord a→pt.
            if (by - ay) * (pt.0 - ax) <= (pt.1 - ay) * (bx - ax) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(pt);
    }
    Ok(GrenanderDensity { knots: hull })
}

/// MLE of a half-normal scale from `|u|` values at or below the `fraction`
/// quantile, accounting for the truncation. `None` when the likelihood keeps
/// increasing with σ (the central values are flatter than any half-normal).
fn truncated_half_normal_scale(abs_sorted: &[f64], fraction: f64) -> Result<Option<f64>, String> {
    let full = fraction >= 1.0;
    let cutoff = quantile_sorted(abs_sorted, fraction.min(1.0));
    let central: Vec<f64> = abs_sorted.iter().copied().filter(|&x| full || x <= cutoff).collect();
    let n0 = central.len() as f64;
    let s2: f64 = central.iter().map(|x| x * x).sum();
    let scale = (s2 / n0).sqrt();
    if !(scale > 0.0) {
        return Err("zero null scale estimate".into());
    }
    if full {
        return Ok(Some(scale));
    }
    let std = Normal::standard();
    // In units of `scale`: −ℓ/n0 = t + e^{−2t}/2 + ln(2Φ(c/σ) − 1).
    let c = cutoff / scale;
    let neg_ll = |t: f64| {
        let inv = (-t).exp();
        let mass = 2.0 * std.cdf(c * inv) - 1.0;
        if mass <= 0.0 {
            return f64::INFINITY;
        }
        t + 0.5 * inv * inv + mass.ln()
    };
    const SPAN: f64 = 4.0;
    let (t, _) = golden_section(neg_ll, -SPAN, SPAN, 1e-10);
    Ok((t < SPAN - 1e-3).then(|| scale * t.exp()))
}

/// Scale fitted on the requested central fraction, widened in steps of
/// [`FRACTION_STEP`] while the truncated likelihood has no maximum. The
/// untruncated fit at fraction 1 always exists.
fn null_scale(abs_sorted: &[f64], fraction: f64) -> Result<f64, String> {
    let mut f = fraction;
    loop {
        if let Some(sigma) = truncated_half_normal_scale(abs_sorted, f)? {
            return Ok(sigma);
        }
        f = (f + FRACTION_STEP).min(1.0);
    }
}

fn estimate_with_scale(u: &[f64], sigma: f64) -> Result<Estimate, String> {
    let std = Normal::standard();
    let p: Vec<f64> = u
        .iter()
        .map(|x| (2.0 * std.sf(x.abs() / sigma)).clamp(PVALUE_FLOOR, 1.0))
        .collect();
    let density = grenander_density(&p)?;
    let p_max = p.iter().copied().fold(0.0, f64::max);
    let pi0 = density.eval(p_max).min(1.0);
    let fdr = p.iter().map(|&pi| (pi0 / density.eval(pi)).min(1.0)).collect();
    Ok(Estimate { pi0, fdr })
}

pub fn fit_grenander(u: &[f64], params: &GrenanderParams) -> Result<Estimate, String> {
    if u.len() < MIN_STATISTICS {
        return Err(format!("insufficient data: {} statistics, need {MIN_STATISTICS}", u.len()));
    }
    let abs_sorted = sorted_copy(&u.iter().map(|x| x.abs()).collect::<Vec<_>>());
    match params.cutoff_method {
        CutoffMethod::Pct0 => {
            if !(params.pct0 > 0.0 && params.pct0 <= 1.0) {
                return Err(format!("pct0 {} out of (0, 1]", params.pct0));
            }
            let sigma = null_scale(&abs_sorted, params.pct0)?;
            estimate_with_scale(u, sigma)
        }
        CutoffMethod::Fndr => {
            let mut fraction = 0.75;
            let mut last = None;
            for _ in 0..params.fndr_iterations.max(1) {
                let sigma = null_scale(&abs_sorted, fraction)?;
                let est = estimate_with_scale(u, sigma)?;
                fraction = est.pi0.clamp(0.1, 1.0);
                last = Some(est);
            }
            Ok(last.expect("at least one iteration"))
        }
    }
}
