//! Binned-marginal family with a normal empirical null.
//!
//! The marginal density is a Poisson regression of bin counts on a smooth
//! basis of bin midpoints. The weighted null `π₀ f₀` is a zero-centred normal
//! scaled by its mass, fitted either by truncated-normal maximum likelihood
//! on the central quantile interval or by matching a quadratic to the
//! central log-density.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::Estimate;
use crate::numeric::glm::poisson_irls;
use crate::numeric::optimize::golden_section;
use crate::numeric::spline::{self, Basis};
use crate::numeric::{quantile_sorted, sorted_copy};

const MIN_STATISTICS: usize = 50;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
/// Amount the central window's `pct0` shrinks per widening step.
const PCT0_STEP: f64 = 0.075;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NullType {
    Mle,
    CentralMatching,
}

impl NullType {
    pub fn as_str(&self) -> &'static str {
        match self {
            NullType::Mle => "mle",
            NullType::CentralMatching => "central_matching",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Marginal {
    Spline,
    Polynomial,
}

impl Marginal {
    pub fn as_str(&self) -> &'static str {
        match self {
            Marginal::Spline => "spline",
            Marginal::Polynomial => "polynomial",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalNullParams {
    pub nulltype: NullType,
    pub marginal: Marginal,
    /// The null is fitted on the `[pct0, 1 - pct0]` quantile interval.
    pub pct0: f64,
    /// Fraction of outlying statistics (split between both tails) left out
    /// of the marginal fit.
    pub pct: f64,
    pub bins: usize,
    pub spline_df: usize,
    pub poly_degree: usize,
}

impl Default for EmpiricalNullParams {
    fn default() -> Self {
        Self {
            nulltype: NullType::Mle,
            marginal: Marginal::Spline,
            pct0: 0.225,
            pct: 0.0,
            bins: 120,
            spline_df: 7,
            poly_degree: 7,
        }
    }
}

struct Binned {
    lo: f64,
    width: f64,
    mids: Vec<f64>,
    counts: Vec<f64>,
}

fn bin(sorted: &[f64], lo: f64, hi: f64, k: usize) -> Binned {
    let width = (hi - lo) / k as f64;
    let mut counts = vec![0.0; k];
    for &x in sorted.iter().filter(|&&x| x >= lo && x <= hi) {
        let j = (((x - lo) / width) as usize).min(k - 1);
        counts[j] += 1.0;
    }
    let mids = (0..k).map(|j| lo + (j as f64 + 0.5) * width).collect();
    Binned {
        lo,
        width,
        mids,
        counts,
    }
}

/// Weighted null `mass · N(u; 0, σ)`.
#[derive(Debug, Clone, Copy)]
struct WeightedNull {
    sigma: f64,
    mass: f64,
}

impl WeightedNull {
    fn ln_density(&self, u: f64) -> f64 {
        self.mass.ln() - LN_SQRT_2PI - self.sigma.ln() - 0.5 * (u / self.sigma).powi(2)
    }
}

/// Truncated-normal MLE of σ from statistics inside `[a, b]`, with the null
/// mass implied by the fraction of statistics that fall inside.
fn mle_null(sorted: &[f64], a: f64, b: f64) -> Result<WeightedNull, String> {
    let central: Vec<f64> = sorted.iter().copied().filter(|&x| x >= a && x <= b).collect();
    let n0 = central.len() as f64;
    if central.len() < 5 {
        return Err(format!("central interval holds {} statistics", central.len()));
    }
    let s2: f64 = central.iter().map(|x| x * x).sum();
    let scale = (s2 / n0).sqrt();
    if !(scale > 0.0) {
        return Err("central statistics have zero spread".into());
    }
    let std = Normal::standard();
    // Written in units of `scale` so the optimum is exactly scale-equivariant.
    let (a_s, b_s) = (a / scale, b / scale);
    let neg_ll = |t: f64| {
        let inv = (-t).exp();
        let q = std.cdf(b_s * inv) - std.cdf(a_s * inv);
        if q <= 0.0 {
            return f64::INFINITY;
        }
        n0 * (t + 0.5 * inv * inv + q.ln())
    };
    const SPAN: f64 = 4.0;
    let (t, _) = golden_section(neg_ll, -SPAN, SPAN, 1e-10);
    if t > SPAN - 1e-3 {
        return Err("truncated-normal likelihood has no interior maximum".into());
    }
    let sigma = scale * t.exp();
    let q = std.cdf(b / sigma) - std.cdf(a / sigma);
    Ok(WeightedNull {
        sigma,
        mass: n0 / sorted.len() as f64 / q,
    })
}

/// Quadratic `β₀ + β₂ x²` fitted to the log-density of nonempty central bins.
fn central_matching_null(binned: &Binned, n: f64, a: f64, b: f64) -> Result<WeightedNull, String> {
    let pts: Vec<(f64, f64)> = binned
        .mids
        .iter()
        .zip(&binned.counts)
        .filter(|(&m, &c)| m >= a && m <= b && c > 0.0)
        .map(|(&m, &c)| (m * m, (c / (n * binned.width)).ln()))
        .collect();
    if pts.len() < 3 {
        return Err(format!("{} nonempty central bins", pts.len()));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if !(sxx > 0.0) {
        return Err("central bins are degenerate".into());
    }
    let beta2 = sxy / sxx;
    let beta0 = my - beta2 * mx;
    if !(beta2 < 0.0) {
        return Err("central log-density is not concave".into());
    }
    let sigma = (-0.5 / beta2).sqrt();
    Ok(WeightedNull {
        sigma,
        mass: (beta0 + LN_SQRT_2PI + sigma.ln()).exp(),
    })
}

pub fn fit_empirical_null(u: &[f64], params: &EmpiricalNullParams) -> Result<Estimate, String> {
    if u.len() < MIN_STATISTICS {
        return Err(format!("insufficient data: {} statistics, need {MIN_STATISTICS}", u.len()));
    }
    if !(0.0..0.5).contains(&params.pct0) || !(0.0..1.0).contains(&params.pct) {
        return Err(format!("pct0 {} / pct {} out of range", params.pct0, params.pct));
    }
    let sorted = sorted_copy(u);
    let n = sorted.len() as f64;
    let (lo, hi) = if params.pct > 0.0 {
        (
            quantile_sorted(&sorted, params.pct / 2.0),
            quantile_sorted(&sorted, 1.0 - params.pct / 2.0),
        )
    } else {
        (sorted[0], sorted[sorted.len() - 1])
    };
    if !(hi > lo) {
        return Err("statistics span an empty range".into());
    }
    let binned = bin(&sorted, lo, hi, params.bins.max(2));
    let basis = match params.marginal {
        Marginal::Spline => Basis::natural_spline(&binned.mids, params.spline_df),
        Marginal::Polynomial => Basis::polynomial(&binned.mids, params.poly_degree),
    };
    let design = basis.design(&binned.mids);
    let poisson = poisson_irls(&design, &binned.counts, 100)?;
    let ln_marginal = |x: f64| {
        let x = x.clamp(binned.lo, binned.lo + binned.width * binned.counts.len() as f64);
        spline::evaluate(&basis, &poisson.coef, x) - (n * binned.width).ln()
    };

    // A narrow central window can leave too little curvature to fit; widen
    // it step by step (down to the full range) before giving up.
    let mut pct0 = params.pct0;
    let null = loop {
        let (a, b) = (quantile_sorted(&sorted, pct0), quantile_sorted(&sorted, 1.0 - pct0));
        let fit = match params.nulltype {
            NullType::Mle => mle_null(&sorted, a, b),
            NullType::CentralMatching => central_matching_null(&binned, n, a, b),
        };
        match fit {
            Ok(null) => break null,
            Err(e) if pct0 == 0.0 => return Err(e),
            // Rounded so widening lands exactly on the neighbouring grid value.
            Err(_) => pct0 = ((pct0 - PCT0_STEP) * 1e12).round().max(0.0) / 1e12,
        }
    };
    if !(null.sigma > 0.0 && null.sigma.is_finite() && null.mass > 0.0 && null.mass.is_finite()) {
        return Err(format!("degenerate null fit: σ={} mass={}", null.sigma, null.mass));
    }
    let fdr = u
        .iter()
        .map(|&x| (null.ln_density(x) - ln_marginal(x)).exp().min(1.0))
        .collect();
    Ok(Estimate {
        pi0: null.mass.min(1.0),
        fdr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn normals(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn too_few_statistics() {
        assert!(fit_empirical_null(&normals(20, 1), &EmpiricalNullParams::default()).is_err());
    }

    #[test]
    fn pure_null_gives_high_fdr() {
        let u = normals(10_000, 2);
        for nulltype in [NullType::Mle, NullType::CentralMatching] {
            let p = EmpiricalNullParams {
                nulltype,
                ..Default::default()
            };
            let est = fit_empirical_null(&u, &p).unwrap();
            assert!(est.pi0 >= 0.95, "{nulltype:?} pi0 {}", est.pi0);
            let med = crate::numeric::median(&est.fdr);
            assert!(med >= 0.9, "{nulltype:?} median fdr {med}");
        }
    }

    #[test]
    fn mle_null_is_scale_equivariant() {
        let mut u = normals(2000, 3);
        for x in u.iter_mut().take(300) {
            *x = x.signum() * (2.5 + x.abs());
        }
        let p = EmpiricalNullParams::default();
        let a = fit_empirical_null(&u, &p).unwrap();
        let scaled: Vec<f64> = u.iter().map(|x| 2.0 * x).collect();
        let b = fit_empirical_null(&scaled, &p).unwrap();
        assert!((a.pi0 - b.pi0).abs() < 1e-9, "{} {}", a.pi0, b.pi0);
        for (x, y) in a.fdr.iter().zip(&b.fdr) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn narrow_window_widens_until_the_null_fits() {
        let phi = crate::generator::GeneratorParams::new(0.68, 0.95, 0.75, 1.43, 3.03).unwrap();
        let params = EmpiricalNullParams {
            pct0: 0.3,
            ..Default::default()
        };
        let mut hits = 0;
        for seed in 0..300 {
            let u = crate::generator::sample_dataset(&phi, 160, seed).unwrap().u;
            let sorted = sorted_copy(&u);
            let window = |p: f64| mle_null(&sorted, quantile_sorted(&sorted, p), quantile_sorted(&sorted, 1.0 - p));
            if window(0.3).is_ok() {
                continue;
            }
            let widened = [0.225, 0.15, 0.075, 0.0].into_iter().find(|&p| window(p).is_ok());
            let got = fit_empirical_null(&u, &params);
            match widened {
                Some(p) => {
                    let expected = fit_empirical_null(&u, &EmpiricalNullParams { pct0: p, ..params }).unwrap();
                    assert_eq!(got.unwrap(), expected);
                }
                None => assert!(got.is_err()),
            }
            hits += 1;
        }
        assert!(hits > 0, "no seed exercised the fallback");
    }
}
