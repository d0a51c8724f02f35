//! Parametric synthetic generator.
//!
//! Statistics are drawn from a two-group mixture whose null is `N(0, σ₀)` and
//! whose alternative is a pair of nonlocal half-normal components, one on each
//! side of zero:
//!
//! ```text
//! f0(u) = N(u; 0, σ₀)
//! f1(u) = π₁ₙ · (2u²/σ₁ₙ²) N(u; 0, σ₁ₙ) 1(u < 0) + (1 − π₁ₙ) · (2u²/σ₁ₚ²) N(u; 0, σ₁ₚ) 1(u > 0)
//! f(u)  = π₀ f0(u) + (1 − π₀) f1(u)
//! ```
//!
//! The `u²` factor makes each alternative side a Maxwell-type density: its
//! magnitude is `σ √χ²₃`, and the weighted MLE of its scale is
//! `σ² = Σ r u² / (3 Σ r)`. The generator is fitted by EM, sampled to produce
//! datasets with known labels, and its Bayes-rule fdr is the ground truth
//! those datasets carry.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{rng_for, Stream};
use crate::numeric::quantile_sorted;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const PROPORTION_BOUNDS: (f64, f64) = (1e-6, 1.0 - 1e-6);
const SCALE_FLOOR: f64 = 1e-6;

/// Mixture parameters `(π₀, σ₀, π₁ₙ, σ₁ₙ, σ₁ₚ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    /// Proportion of null hypotheses.
    pub pi0: f64,
    /// Scale of the normal null.
    pub sigma0: f64,
    /// Share of alternative mass on the negative side.
    pub pi1n: f64,
    pub sigma1n: f64,
    pub sigma1p: f64,
}

impl GeneratorParams {
    pub fn new(pi0: f64, sigma0: f64, pi1n: f64, sigma1n: f64, sigma1p: f64) -> Result<Self> {
        let p = Self {
            pi0,
            sigma0,
            pi1n,
            sigma1n,
            sigma1p,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let prop_ok = |x: f64| (0.0..=1.0).contains(&x);
        let scale_ok = |x: f64| x > 0.0 && x.is_finite();
        if !prop_ok(self.pi0) || !prop_ok(self.pi1n) {
            return Err(Error::input(format!("mixture proportions out of [0,1]: {self:?}")));
        }
        if !scale_ok(self.sigma0) || !scale_ok(self.sigma1n) || !scale_ok(self.sigma1p) {
            return Err(Error::input(format!("scales must be positive and finite: {self:?}")));
        }
        Ok(())
    }

    /// Same alternative with the two sides swapped, i.e. the density of `-u`.
    pub fn mirrored(&self) -> Self {
        Self {
            pi1n: 1.0 - self.pi1n,
            sigma1n: self.sigma1p,
            sigma1p: self.sigma1n,
            ..*self
        }
    }

    fn clamped(mut self) -> Self {
        self.pi0 = self.pi0.clamp(PROPORTION_BOUNDS.0, PROPORTION_BOUNDS.1);
        self.pi1n = self.pi1n.clamp(PROPORTION_BOUNDS.0, PROPORTION_BOUNDS.1);
        self.sigma0 = self.sigma0.max(SCALE_FLOOR);
        self.sigma1n = self.sigma1n.max(SCALE_FLOOR);
        self.sigma1p = self.sigma1p.max(SCALE_FLOOR);
        self
    }
}

fn ln_normal(u: f64, sigma: f64) -> f64 {
    -LN_SQRT_2PI - sigma.ln() - 0.5 * (u / sigma) * (u / sigma)
}

/// `ln[(2u²/σ²) N(u; 0, σ)]` without the side indicator.
fn ln_nonlocal(u: f64, sigma: f64) -> f64 {
    std::f64::consts::LN_2 + 2.0 * (u.abs().ln() - sigma.ln()) + ln_normal(u, sigma)
}

fn ln_or_neg_inf(x: f64) -> f64 {
    if x > 0.0 {
        x.ln()
    } else {
        f64::NEG_INFINITY
    }
}

/// Log of the three weighted components `[π₀f0, (1−π₀)π₁ₙ g₋, (1−π₀)(1−π₁ₙ) g₊]`.
fn ln_weighted_components(u: f64, phi: &GeneratorParams) -> [f64; 3] {
    let null = ln_or_neg_inf(phi.pi0) + ln_normal(u, phi.sigma0);
    let alt = ln_or_neg_inf(1.0 - phi.pi0);
    let neg = if u < 0.0 {
        alt + ln_or_neg_inf(phi.pi1n) + ln_nonlocal(u, phi.sigma1n)
    } else {
        f64::NEG_INFINITY
    };
    let pos = if u > 0.0 {
        alt + ln_or_neg_inf(1.0 - phi.pi1n) + ln_nonlocal(u, phi.sigma1p)
    } else {
        f64::NEG_INFINITY
    };
    [null, neg, pos]
}

fn log_sum_exp(xs: &[f64; 3]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Null, alternative and marginal densities at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Densities {
    pub f0: f64,
    pub f1: f64,
    pub f: f64,
}

pub fn eval_densities(u: f64, phi: &GeneratorParams) -> Densities {
    let f0 = ln_normal(u, phi.sigma0).exp();
    let f1 = if u < 0.0 {
        phi.pi1n * ln_nonlocal(u, phi.sigma1n).exp()
    } else if u > 0.0 {
        (1.0 - phi.pi1n) * ln_nonlocal(u, phi.sigma1p).exp()
    } else {
        0.0
    };
    Densities {
        f0,
        f1,
        f: phi.pi0 * f0 + (1.0 - phi.pi0) * f1,
    }
}

/// Log marginal density `ln f(u)`.
pub fn ln_marginal(u: f64, phi: &GeneratorParams) -> f64 {
    log_sum_exp(&ln_weighted_components(u, phi))
}

/// Bayes-rule local fdr `π₀ f0(u) / f(u)`.
pub fn true_fdr(u: &[f64], phi: &GeneratorParams) -> Vec<f64> {
    u.iter().map(|&x| true_fdr_at(x, phi)).collect()
}

fn true_fdr_at(u: f64, phi: &GeneratorParams) -> f64 {
    let c = ln_weighted_components(u, phi);
    let total = log_sum_exp(&c);
    if total == f64::NEG_INFINITY {
        // f(u) = 0 only happens at u = 0 with π₀ = 0.
        return 1.0;
    }
    (c[0] - total).exp().clamp(0.0, 1.0)
}

/// Statistics with known ground truth. `labels[i] == 1` marks an alternative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticDataset {
    pub u: Vec<f64>,
    pub fdr_true: Vec<f64>,
    pub labels: Vec<u8>,
    pub seed: u64,
}

/// Draws `size` labelled statistics from the generator.
pub fn sample_dataset(phi: &GeneratorParams, size: usize, seed: u64) -> Result<SyntheticDataset> {
    phi.validate()?;
    if size == 0 {
        return Err(Error::input("synthetic dataset size must be positive"));
    }
    let mut rng: ChaCha8Rng = rand::SeedableRng::seed_from_u64(seed);
    let (u, labels) = draw(phi, size, &mut rng);
    let fdr_true = true_fdr(&u, phi);
    Ok(SyntheticDataset {
        u,
        fdr_true,
        labels,
        seed,
    })
}

fn draw(phi: &GeneratorParams, size: usize, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<u8>) {
    let null = Normal::new(0.0, phi.sigma0).expect("validated scale");
    let chi3 = ChiSquared::<f64>::new(3.0).expect("constant df");
    let mut u = Vec::with_capacity(size);
    let mut labels = Vec::with_capacity(size);
    for _ in 0..size {
        let alternative = rng.random::<f64>() < 1.0 - phi.pi0;
        if alternative {
            let negative = rng.random::<f64>() < phi.pi1n;
            let magnitude: f64 = chi3.sample(rng);
            let magnitude = magnitude.sqrt();
            u.push(if negative {
                -phi.sigma1n * magnitude
            } else {
                phi.sigma1p * magnitude
            });
            labels.push(1);
        } else {
            u.push(null.sample(rng));
            labels.push(0);
        }
    }
    (u, labels)
}

/// EM settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmConfig {
    pub max_iter: usize,
    /// Relative change in log-likelihood that ends a restart.
    pub tol: f64,
    pub n_restarts: usize,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            max_iter: 500,
            tol: 1e-8,
            n_restarts: 5,
        }
    }
}

impl EmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 || self.n_restarts == 0 || !(self.tol > 0.0) {
            return Err(Error::config(format!("EM settings must be positive: {self:?}")));
        }
        Ok(())
    }
}

/// Result of [`fit_em`]: the best restart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmFit {
    pub params: GeneratorParams,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    pub restart: usize,
    /// Log-likelihood of the parameters entering each iteration, plus the final one.
    pub trace: Vec<f64>,
}

fn moment_start(sorted: &[f64]) -> Result<GeneratorParams> {
    let iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
    let mut sigma0 = iqr / 1.348_979_500_392_163_5;
    if !(sigma0 > 0.0) {
        let n = sorted.len() as f64;
        sigma0 = (sorted.iter().map(|x| x * x).sum::<f64>() / n).sqrt();
    }
    if !(sigma0 > 0.0) {
        return Err(Error::GeneratorFit("statistics have zero spread".into()));
    }
    let cut = 2.0 * sigma0;
    let tail_scale = |side: &mut dyn Iterator<Item = &f64>| {
        let (n, s2) = side.fold((0usize, 0.0), |(n, s), x| (n + 1, s + x * x));
        if n == 0 {
            (0, 2.0 * sigma0)
        } else {
            (n, (s2 / (3.0 * n as f64)).sqrt())
        }
    };
    let (n_neg, sigma1n) = tail_scale(&mut sorted.iter().filter(|&&x| x < -cut));
    let (n_pos, sigma1p) = tail_scale(&mut sorted.iter().filter(|&&x| x > cut));
    let pi1n = if n_neg + n_pos == 0 {
        0.5
    } else {
        n_neg as f64 / (n_neg + n_pos) as f64
    };
    Ok(GeneratorParams {
        pi0: 0.8,
        sigma0,
        pi1n,
        sigma1n,
        sigma1p,
    }
    .clamped())
}

fn jittered(start: &GeneratorParams, rng: &mut ChaCha8Rng) -> GeneratorParams {
    let mut j = || rng.random_range(0.7..1.3);
    GeneratorParams {
        pi0: start.pi0 * j(),
        sigma0: start.sigma0 * j(),
        pi1n: start.pi1n * j(),
        sigma1n: start.sigma1n * j(),
        sigma1p: start.sigma1p * j(),
    }
    .clamped()
}

struct EStep {
    log_likelihood: f64,
    r0: f64,
    rn: f64,
    rp: f64,
    r0u2: f64,
    rnu2: f64,
    rpu2: f64,
}

fn e_step(u: &[f64], phi: &GeneratorParams) -> EStep {
    let mut s = EStep {
        log_likelihood: 0.0,
        r0: 0.0,
        rn: 0.0,
        rp: 0.0,
        r0u2: 0.0,
        rnu2: 0.0,
        rpu2: 0.0,
    };
    for &x in u {
        let c = ln_weighted_components(x, phi);
        let total = log_sum_exp(&c);
        s.log_likelihood += total;
        let x2 = x * x;
        let r0 = (c[0] - total).exp();
        let rn = (c[1] - total).exp();
        let rp = (c[2] - total).exp();
        s.r0 += r0;
        s.rn += rn;
        s.rp += rp;
        s.r0u2 += r0 * x2;
        s.rnu2 += rn * x2;
        s.rpu2 += rp * x2;
    }
    s
}

fn m_step(s: &EStep, n: usize, prev: &GeneratorParams) -> GeneratorParams {
    let mut next = *prev;
    next.pi0 = s.r0 / n as f64;
    let alt = s.rn + s.rp;
    if alt > 0.0 {
        next.pi1n = s.rn / alt;
    }
    if s.r0 > 0.0 {
        next.sigma0 = (s.r0u2 / s.r0).sqrt();
    }
    if s.rn > 0.0 {
        next.sigma1n = (s.rnu2 / (3.0 * s.rn)).sqrt();
    }
    if s.rp > 0.0 {
        next.sigma1p = (s.rpu2 / (3.0 * s.rp)).sqrt();
    }
    next.clamped()
}

fn run_restart(u: &[f64], start: GeneratorParams, cfg: &EmConfig, restart: usize) -> Result<EmFit> {
    let mut phi = start;
    let mut stats = e_step(u, &phi);
    let mut trace = vec![stats.log_likelihood];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        if !stats.log_likelihood.is_finite() {
            return Err(Error::GeneratorFit(format!(
                "non-finite log-likelihood in restart {restart}"
            )));
        }
        let next = m_step(&stats, u.len(), &phi);
        let next_stats = e_step(u, &next);
        iterations += 1;
        let change = (next_stats.log_likelihood - stats.log_likelihood).abs();
        let scale = stats.log_likelihood.abs().max(1.0);
        phi = next;
        stats = next_stats;
        trace.push(stats.log_likelihood);
        if change <= cfg.tol * scale {
            converged = true;
            break;
        }
    }
    if !stats.log_likelihood.is_finite() {
        return Err(Error::GeneratorFit(format!(
            "non-finite log-likelihood in restart {restart}"
        )));
    }
    Ok(EmFit {
        params: phi,
        log_likelihood: stats.log_likelihood,
        iterations,
        converged,
        restart,
        trace,
    })
}

/// Maximum-likelihood fit of the generator by EM with restarts.
///
/// Restart 0 starts from robust moments of `u`; later restarts jitter that
/// start. The restart with the highest log-likelihood wins, ties going to
/// the lowest restart index. The fit depends on `u` only as a multiset.
pub fn fit_em(u: &[f64], cfg: &EmConfig, seed: u64) -> Result<EmFit> {
    cfg.validate()?;
    if u.len() < 10 {
        return Err(Error::GeneratorFit(format!(
            "need at least 10 statistics, got {}",
            u.len()
        )));
    }
    if u.iter().any(|x| !x.is_finite()) {
        return Err(Error::input("non-finite statistic"));
    }
    if u.iter().all(|&x| x == 0.0) {
        return Err(Error::GeneratorFit("all statistics are zero".into()));
    }
    let mut sorted = u.to_vec();
    sorted.sort_by(f64::total_cmp);
    let start = moment_start(&sorted)?;
    let mut rng = rng_for(seed, Stream::EmRestart, 0);
    let starts: Vec<GeneratorParams> = (0..cfg.n_restarts)
        .map(|r| if r == 0 { start } else { jittered(&start, &mut rng) })
        .collect();
    let fits: Vec<Result<EmFit>> = starts
        .into_par_iter()
        .enumerate()
        .map(|(r, s)| run_restart(&sorted, s, cfg, r))
        .collect();
    let mut best: Option<EmFit> = None;
    let mut last_err = None;
    for fit in fits {
        match fit {
            Ok(f) => {
                if best.as_ref().is_none_or(|b| f.log_likelihood > b.log_likelihood) {
                    best = Some(f);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap_or_else(|| Error::GeneratorFit("no restart succeeded".into())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn phi() -> GeneratorParams {
        GeneratorParams::new(0.8, 1.0, 0.5, 2.0, 2.0).unwrap()
    }

    #[test]
    fn alternative_vanishes_at_zero() {
        let d = eval_densities(0.0, &phi());
        assert_eq!(d.f1, 0.0);
        assert_eq!(true_fdr(&[0.0], &phi()), vec![1.0]);
    }

    #[test]
    fn densities_at_one_by_hand() {
        // f0(1) = e^{-1/2}/√(2π); positive side: 0.5 · (2/4) · e^{-1/8}/(2√(2π)).
        let s2pi = (2.0 * std::f64::consts::PI).sqrt();
        let f0 = (-0.5f64).exp() / s2pi;
        let f1 = 0.5 * 0.5 * (-0.125f64).exp() / (2.0 * s2pi);
        let d = eval_densities(1.0, &phi());
        assert!((d.f0 - f0).abs() < 1e-15);
        assert!((d.f1 - f1).abs() < 1e-15);
        assert!((d.f - (0.8 * f0 + 0.2 * f1)).abs() < 1e-15);
    }

    #[test]
    fn null_only_generator_has_unit_fdr() {
        let p = GeneratorParams::new(1.0, 1.3, 0.4, 2.0, 3.0).unwrap();
        assert!(true_fdr(&[-4.0, 0.3, 7.0], &p).iter().all(|&f| f == 1.0));
    }

    #[test]
    fn degenerate_label_draws() {
        let all_null = GeneratorParams::new(1.0, 1.0, 0.5, 2.0, 2.0).unwrap();
        let d = sample_dataset(&all_null, 500, 3).unwrap();
        assert!(d.labels.iter().all(|&l| l == 0));
        let all_neg = GeneratorParams::new(0.0, 1.0, 1.0, 2.0, 2.0).unwrap();
        let d = sample_dataset(&all_neg, 500, 3).unwrap();
        assert!(d.u.iter().all(|&x| x < 0.0));
        assert!(d.labels.iter().all(|&l| l == 1));
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(GeneratorParams::new(1.2, 1.0, 0.5, 1.0, 1.0).is_err());
        assert!(GeneratorParams::new(0.5, 0.0, 0.5, 1.0, 1.0).is_err());
        assert!(GeneratorParams::new(0.5, 1.0, 0.5, f64::INFINITY, 1.0).is_err());
    }

    #[test]
    fn em_rejects_degenerate_input() {
        let cfg = EmConfig::default();
        assert!(fit_em(&[1.0; 5], &cfg, 0).is_err());
        assert!(matches!(fit_em(&[0.0; 20], &cfg, 0), Err(Error::GeneratorFit(_))));
    }

    #[test]
    fn em_trace_is_monotone() {
        let truth = GeneratorParams::new(0.7, 1.0, 0.4, 2.5, 3.0).unwrap();
        let d = sample_dataset(&truth, 2000, 11).unwrap();
        let fit = fit_em(&d.u, &EmConfig::default(), 5).unwrap();
        for w in fit.trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-9 * w[0].abs(), "{} -> {}", w[0], w[1]);
        }
    }
}
