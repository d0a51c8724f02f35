//! Accuracy, ranking and calibration metrics for fdr estimates against
//! simulation ground truth.

mod auc;
mod calibration;
mod classify;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use auc::{pr_auc, roc_auc};
pub use calibration::{
    global_calibration, local_bin_edges, local_bin_index, local_calibration, wilson_interval, CalibrationCurve,
    CalibrationPoint,
};
pub use classify::{classify, fdr_level_cutoff, nearest_rank, ClassificationReport, CutoffRule};

use crate::model::{empirical_tail_fdr, mse_loss};
use crate::seed::{rng_for, Stream};
use crate::{Error, FdrFit, Result};

/// Interior bin count used by [`local_calibration`] unless configured.
pub const DEFAULT_CALIBRATION_BINS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// RMSE against the true local fdr, when known.
    pub fdr_rmse: Option<f64>,
    /// RMSE of tail-area Fdr against the realised Fdr from labels.
    pub tail_fdr_rmse: f64,
    pub brier: f64,
    /// `None` when the labels hold a single class.
    pub pr_auc: Option<f64>,
    pub roc_auc: Option<f64>,
    pub pi0_hat: f64,
    /// `pi0_hat` minus the realised null fraction of the labels.
    pub pi0_error: f64,
}

impl EvalReport {
    /// `(name, value)` pairs in a fixed order; undefined metrics are skipped.
    pub fn named(&self) -> Vec<(&'static str, f64)> {
        let mut out = Vec::with_capacity(7);
        if let Some(v) = self.fdr_rmse {
            out.push(("fdr_rmse", v));
        }
        out.push(("Fdr_rmse", self.tail_fdr_rmse));
        out.push(("brier", self.brier));
        if let Some(v) = self.pr_auc {
            out.push(("pr_auc", v));
        }
        if let Some(v) = self.roc_auc {
            out.push(("roc_auc", v));
        }
        out.push(("pi0_hat", self.pi0_hat));
        out.push(("pi0_error", self.pi0_error));
        out
    }
}

pub fn rmse(a: &[f64], b: &[f64]) -> Result<f64> {
    mse_loss(a, b).map(f64::sqrt)
}

/// Brier score of the alternative probability `1 − fdr` against the labels.
pub fn brier(fdr_hat: &[f64], labels: &[u8]) -> Result<f64> {
    let truth: Vec<f64> = labels.iter().map(|&l| f64::from(l)).collect();
    let prob: Vec<f64> = fdr_hat.iter().map(|f| 1.0 - f).collect();
    mse_loss(&prob, &truth)
}

pub fn evaluate(fit: &FdrFit, u: &[f64], labels: &[u8], fdr_true: Option<&[f64]>) -> Result<EvalReport> {
    let n = u.len();
    if fit.fdr.len() != n || fit.tail_fdr.len() != n || labels.len() != n {
        return Err(Error::input("evaluate: fit, statistics and labels differ in length"));
    }
    let fdr_rmse = match fdr_true {
        Some(t) => Some(rmse(&fit.fdr, t)?),
        None => None,
    };
    let realised = empirical_tail_fdr(u, labels)?;
    let scores: Vec<f64> = fit.fdr.iter().map(|f| 1.0 - f).collect();
    let null_fraction = labels.iter().filter(|&&l| l == 0).count() as f64 / n as f64;
    Ok(EvalReport {
        fdr_rmse,
        tail_fdr_rmse: rmse(&fit.tail_fdr, &realised)?,
        brier: brier(&fit.fdr, labels)?,
        pr_auc: pr_auc(&scores, labels),
        roc_auc: roc_auc(&scores, labels),
        pi0_hat: fit.pi0,
        pi0_error: fit.pi0 - null_fraction,
    })
}

/// Resamples hypotheses with replacement `reps` times and re-evaluates. The
/// tail-area Fdr is recomputed within each resample. Replicate `r` draws from
/// its own seeded stream, so output order and values do not depend on threads.
pub fn bootstrap_evaluate(
    fit: &FdrFit,
    u: &[f64],
    labels: &[u8],
    fdr_true: Option<&[f64]>,
    reps: usize,
    seed: u64,
) -> Result<Vec<EvalReport>> {
    let n = u.len();
    if fit.fdr.len() != n || labels.len() != n || fdr_true.is_some_and(|t| t.len() != n) {
        return Err(Error::input("bootstrap_evaluate: inconsistent lengths"));
    }
    (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_for(seed, Stream::Bootstrap, r as u64);
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let ub: Vec<f64> = idx.iter().map(|&i| u[i]).collect();
            let lb: Vec<u8> = idx.iter().map(|&i| labels[i]).collect();
            let tb: Option<Vec<f64>> = fdr_true.map(|t| idx.iter().map(|&i| t[i]).collect());
            let fb = FdrFit::new(fit.model_id.clone(), &ub, fit.pi0, idx.iter().map(|&i| fit.fdr[i]).collect())?;
            evaluate(&fb, &ub, &lb, tb.as_deref())
        })
        .collect()
}
