use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use super::pi0::{estimate_pi0_lambda, Pi0Method};
use super::Estimate;
use crate::model::PVALUE_FLOOR;
use crate::numeric::kde::{silverman_bandwidth, BinnedKde};

const MIN_PVALUES: usize = 10;
/// Upper clamp before transforming; `p = 1` maps to +∞ under both transforms.
const PVALUE_CEILING: f64 = 1.0 - 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    Probit,
    Logit,
}

impl Transform {
    pub fn as_str(&self) -> &'static str {
        match self {
            Transform::Probit => "probit",
            Transform::Logit => "logit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PValueParams {
    pub pi0_method: Pi0Method,
    pub transf: Transform,
    /// Multiplier on the rule-of-thumb bandwidth.
    pub adj: f64,
    pub smooth_log_pi0: bool,
    pub bootstrap_reps: usize,
    pub bootstrap_seed: u64,
}

impl Default for PValueParams {
    fn default() -> Self {
        Self {
            pi0_method: Pi0Method::Smoother,
            transf: Transform::Probit,
            adj: 1.5,
            smooth_log_pi0: false,
            bootstrap_reps: 100,
            bootstrap_seed: 0,
        }
    }
}

/// Local fdr from p-values: `π̂₀ / f̂(p)`, where `f̂` is a kernel density on
/// the transformed scale mapped back through the Jacobian, followed by a
/// running maximum so fdr never decreases as p grows.
pub fn fit_pvalue_family(p: &[f64], params: &PValueParams) -> Result<Estimate, String> {
    if p.len() < MIN_PVALUES {
        return Err(format!("insufficient data: {} p-values, need {MIN_PVALUES}", p.len()));
    }
    if p.iter().any(|x| !(0.0..=1.0).contains(x)) {
        return Err("p-values must lie in [0, 1]".into());
    }
    if p.iter().all(|&x| x == p[0]) {
        return Err("all p-values identical".into());
    }
    if !(params.adj > 0.0) {
        return Err(format!("bandwidth multiplier {} must be positive", params.adj));
    }
    let pi0 = estimate_pi0_lambda(
        p,
        params.pi0_method,
        params.smooth_log_pi0,
        params.bootstrap_reps,
        params.bootstrap_seed,
    );
    let std = Normal::standard();
    let clamped: Vec<f64> = p.iter().map(|x| x.clamp(PVALUE_FLOOR, PVALUE_CEILING)).collect();
    let x: Vec<f64> = clamped
        .iter()
        .map(|&pi| match params.transf {
            Transform::Probit => std.inverse_cdf(pi),
            Transform::Logit => (pi / (1.0 - pi)).ln(),
        })
        .collect();
    if x.iter().any(|v| !v.is_finite()) {
        return Err("transform produced a non-finite value".into());
    }
    let bandwidth = params.adj * silverman_bandwidth(&x);
    let kde = BinnedKde::fit(&x, bandwidth);
    let mut fdr: Vec<f64> = x
        .iter()
        .zip(&clamped)
        .map(|(&xi, &pi)| {
            // |dp/dx| on the transformed scale.
            let dp_dx = match params.transf {
                Transform::Probit => std.pdf(xi),
                Transform::Logit => pi * (1.0 - pi),
            };
            let d = kde.eval(xi);
            if d > 0.0 {
                (pi0 * dp_dx / d).min(1.0)
            } else {
                1.0
            }
        })
        .collect();
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]).then(a.cmp(&b)));
    let mut running = 0.0f64;
    for i in order {
        running = running.max(fdr[i]);
        fdr[i] = running;
    }
    Ok(Estimate { pi0, fdr })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(n: usize) -> Vec<f64> {
        (0..n).map(|i| ((i * 7919) % n) as f64 / n as f64 + 0.5 / n as f64).collect()
    }

    #[test]
    fn zero_pi0_gives_zero_fdr() {
        let p: Vec<f64> = (0..40).map(|i| 1e-6 * (i + 1) as f64).collect();
        let est = fit_pvalue_family(&p, &PValueParams::default()).unwrap();
        assert_eq!(est.pi0, 0.0);
        assert!(est.fdr.iter().all(|&f| f == 0.0));
    }

    #[test]
    fn uniform_pvalues_look_null() {
        let p = uniform(10_000);
        for transf in [Transform::Probit, Transform::Logit] {
            let params = PValueParams {
                transf,
                ..Default::default()
            };
            let est = fit_pvalue_family(&p, &params).unwrap();
            assert!(est.pi0 >= 0.9, "{}", est.pi0);
            let bulk: Vec<f64> = p
                .iter()
                .zip(&est.fdr)
                .filter(|(&pi, _)| (0.2..0.8).contains(&pi))
                .map(|(_, &f)| f)
                .collect();
            let mean = bulk.iter().sum::<f64>() / bulk.len() as f64;
            assert!((mean - est.pi0).abs() < 0.1, "{transf:?}: {mean} vs {}", est.pi0);
        }
    }

    #[test]
    fn identical_pvalues_rejected() {
        assert!(fit_pvalue_family(&[0.3; 20], &PValueParams::default()).is_err());
    }
}
