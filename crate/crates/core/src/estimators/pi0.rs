//! λ-threshold estimates of the null proportion,
//! `π̂₀(λ) = #{p_i > λ} / (I (1 − λ))`, combined across a λ grid by a
//! smoother or by bootstrap choice of λ. Final estimates are capped at 1.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::numeric::spline::{self, Basis};
use crate::seed::{rng_for, Stream};

/// λ ∈ {0.05, 0.10, …, 0.95}.
pub const LAMBDA_GRID: [f64; 19] = [
    0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80,
    0.85, 0.90, 0.95,
];

/// Total degrees of freedom (intercept included) of the λ smoother.
const SMOOTHER_DF: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pi0Method {
    Smoother,
    Bootstrap,
}

impl Pi0Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Pi0Method::Smoother => "smoother",
            Pi0Method::Bootstrap => "bootstrap",
        }
    }
}

/// Uncapped `π̂₀(λ)`.
pub fn pi0_at_lambda(p: &[f64], lambda: f64) -> f64 {
    let above = p.iter().filter(|&&x| x > lambda).count();
    above as f64 / (p.len() as f64 * (1.0 - lambda))
}

/// Uncapped `π̂₀(λ)` over [`LAMBDA_GRID`].
pub fn pi0_lambda_curve(p: &[f64]) -> Vec<f64> {
    curve_from_counts(&exceedance_counts(p.iter().copied()), p.len())
}

/// Number of p-values above each grid λ.
fn exceedance_counts(p: impl Iterator<Item = f64>) -> [usize; 19] {
    // bucket[k] = number of p with exactly k grid values strictly below them
    let mut bucket = [0usize; 20];
    for x in p {
        bucket[LAMBDA_GRID.partition_point(|&l| l < x)] += 1;
    }
    let mut counts = [0usize; 19];
    let mut running = 0;
    for k in (0..19).rev() {
        running += bucket[k + 1];
        counts[k] = running;
    }
    counts
}

fn curve_from_counts(counts: &[usize; 19], n: usize) -> Vec<f64> {
    counts
        .iter()
        .zip(LAMBDA_GRID)
        .map(|(&c, l)| c as f64 / (n as f64 * (1.0 - l)))
        .collect()
}

fn smoothed(curve: &[f64], log_scale: bool, n: usize) -> f64 {
    if curve.iter().all(|&v| v == 0.0) {
        return 0.0;
    }
    let floor = 0.5 / n as f64;
    let y: Vec<f64> = if log_scale {
        curve.iter().map(|&v| v.max(floor).ln()).collect()
    } else {
        curve.to_vec()
    };
    let basis = Basis::natural_spline(&LAMBDA_GRID, SMOOTHER_DF - 1);
    let at_end = match spline::least_squares(&basis, &LAMBDA_GRID, &y) {
        Some(coef) => spline::evaluate(&basis, &coef, LAMBDA_GRID[18]),
        None => y[18],
    };
    if log_scale {
        at_end.exp()
    } else {
        at_end
    }
}

fn bootstrap_choice(p: &[f64], curve: &[f64], reps: usize, seed: u64) -> f64 {
    let reference = curve.iter().copied().fold(f64::INFINITY, f64::min);
    let mut rng = rng_for(seed, Stream::Bootstrap, 0);
    let n = p.len();
    let mut mse = [0.0; 19];
    for _ in 0..reps {
        let counts = exceedance_counts((0..n).map(|_| p[rng.random_range(0..n)]));
        for (m, v) in mse.iter_mut().zip(curve_from_counts(&counts, n)) {
            *m += (v - reference).powi(2);
        }
    }
    let best = (0..19).fold(0, |b, k| if mse[k] < mse[b] { k } else { b });
    curve[best]
}

/// Final π̂₀ in `[0, 1]`. `bootstrap_reps`/`seed` only matter for
/// [`Pi0Method::Bootstrap`]; `smooth_log` only for [`Pi0Method::Smoother`].
pub fn estimate_pi0_lambda(
    p: &[f64],
    method: Pi0Method,
    smooth_log: bool,
    bootstrap_reps: usize,
    seed: u64,
) -> f64 {
    if p.is_empty() {
        return 1.0;
    }
    let curve = pi0_lambda_curve(p);
    let raw = match method {
        Pi0Method::Smoother => smoothed(&curve, smooth_log, p.len()),
        Pi0Method::Bootstrap => bootstrap_choice(p, &curve, bootstrap_reps.max(1), seed),
    };
    raw.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raw_estimate_exceeds_one_and_is_capped() {
        let p: Vec<f64> = (0..10).map(|i| 0.955 + 0.004 * i as f64).collect();
        assert_eq!(pi0_at_lambda(&p, 0.5), 2.0);
        for method in [Pi0Method::Smoother, Pi0Method::Bootstrap] {
            for log in [false, true] {
                assert_eq!(estimate_pi0_lambda(&p, method, log, 100, 1), 1.0);
            }
        }
    }

    #[test]
    fn all_zero_pvalues_give_zero() {
        let p = vec![0.0; 50];
        assert!(pi0_lambda_curve(&p).iter().all(|&v| v == 0.0));
        for method in [Pi0Method::Smoother, Pi0Method::Bootstrap] {
            for log in [false, true] {
                assert_eq!(estimate_pi0_lambda(&p, method, log, 100, 1), 0.0);
            }
        }
    }

    #[test]
    fn curve_matches_direct_count() {
        let p: Vec<f64> = (0..97).map(|i| ((i * 31) % 97) as f64 / 97.0).collect();
        let curve = pi0_lambda_curve(&p);
        for (k, &l) in LAMBDA_GRID.iter().enumerate() {
            assert!((curve[k] - pi0_at_lambda(&p, l)).abs() < 1e-15);
        }
    }

    #[test]
    fn boundary_values_are_not_above_lambda() {
        let p = [0.5, 0.5, 0.75, 1.0];
        assert_eq!(pi0_at_lambda(&p, 0.5), 2.0 / (4.0 * 0.5));
        assert_eq!(pi0_lambda_curve(&p)[9], 2.0 / (4.0 * 0.5));
    }
}
