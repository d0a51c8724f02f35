use serde::{Deserialize, Serialize};

use super::scoring::ObjectiveEstimate;
use crate::error::{Error, Result};
use crate::generator::{ln_marginal, sample_dataset, GeneratorParams};

/// Estimated variance of `L̂`: the sample variance of the per-dataset
/// losses divided by `N`.
pub fn objective_variance(est: &ObjectiveEstimate) -> Result<f64> {
    let losses = &est.per_dataset_losses;
    let n = losses.len();
    if n < 2 {
        return Err(Error::UndefinedVariance(n));
    }
    let mean = losses.iter().sum::<f64>() / n as f64;
    let ss: f64 = losses.iter().map(|l| (l - mean) * (l - mean)).sum();
    Ok(ss / (n - 1) as f64 / n as f64)
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceEstimate {
    pub value: f64,
    pub std_error: f64,
}

/// Pearson χ² divergence of the single-statistic marginal of `generator`
/// from that of `reference`: `E_ref[(f_gen(u)/f_ref(u) − 1)²]` with
/// `u ~ f_ref`.
pub fn chi2_divergence_1d(
    generator: &GeneratorParams,
    reference: &GeneratorParams,
    n_mc: usize,
    seed: u64,
) -> Result<DivergenceEstimate> {
    generator.validate()?;
    if n_mc < 1000 {
        return Err(Error::input(format!("need at least 1000 Monte Carlo draws, got {n_mc}")));
    }
    let draws = sample_dataset(reference, n_mc, seed)?;
    let terms: Vec<f64> = draws
        .u
        .iter()
        .map(|&u| {
            let ratio = (ln_marginal(u, generator) - ln_marginal(u, reference)).exp();
            (ratio - 1.0) * (ratio - 1.0)
        })
        .collect();
    let n = terms.len() as f64;
    let value = terms.iter().sum::<f64>() / n;
    let var = terms.iter().map(|t| (t - value) * (t - value)).sum::<f64>() / (n - 1.0);
    Ok(DivergenceEstimate {
        value,
        std_error: (var / n).sqrt(),
    })
}
