use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffRule {
    /// `(1 − π₀)` quantile of the fdr estimates, true π₀.
    OraclePi0,
    /// Same with the estimated π₀.
    EstimatedPi0,
    /// Fixed cutoff 0.2.
    #[serde(rename = "standard_0.2")]
    Standard,
    /// Largest cutoff whose estimated global FDR stays at or below 0.05.
    #[serde(rename = "fdr_hat_0.05")]
    EstimatedFdr05,
}

impl CutoffRule {
    pub const ALL: [CutoffRule; 4] = [
        CutoffRule::OraclePi0,
        CutoffRule::EstimatedPi0,
        CutoffRule::Standard,
        CutoffRule::EstimatedFdr05,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            CutoffRule::OraclePi0 => "oracle_pi0",
            CutoffRule::EstimatedPi0 => "estimated_pi0",
            CutoffRule::Standard => "standard_0.2",
            CutoffRule::EstimatedFdr05 => "fdr_hat_0.05",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub cutoff_rule: CutoffRule,
    /// `None` when the rule admits no cutoff (no discoveries).
    pub cutoff: Option<f64>,
    pub global_fdr: f64,
    pub sensitivity: f64,
    pub true_discoveries: usize,
    pub false_discoveries: usize,
}

/// Nearest-rank percentile: the `ceil(q·n)`-th smallest value (rank at least 1).
pub fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let rank = ((q * n as f64).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

/// Largest observed fdr value `c` with `mean{fdr ≤ c} ≤ level`.
pub fn fdr_level_cutoff(fdr_hat: &[f64], level: f64) -> Option<f64> {
    let mut sorted = fdr_hat.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut best = None;
    let mut sum = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let c = sorted[i];
        while i < sorted.len() && sorted[i] == c {
            sum += sorted[i];
            i += 1;
        }
        if sum / i as f64 <= level {
            best = Some(c);
        }
    }
    best
}

/// Applies `rule`, declares `fdr_hat ≤ c` non-null and scores the call
/// against `labels` (`1` = alternative).
pub fn classify(
    fdr_hat: &[f64],
    labels: &[u8],
    pi0_true: Option<f64>,
    pi0_hat: f64,
    rule: CutoffRule,
) -> Result<ClassificationReport> {
    if fdr_hat.len() != labels.len() {
        return Err(Error::input("classify: fdr and label lengths differ"));
    }
    if fdr_hat.is_empty() {
        return Err(Error::input("classify: empty input"));
    }
    let mut sorted = fdr_hat.to_vec();
    sorted.sort_by(f64::total_cmp);
    let cutoff = match rule {
        CutoffRule::OraclePi0 => {
            let pi0 = pi0_true.ok_or_else(|| Error::input("oracle_pi0 cutoff needs the true pi0"))?;
            Some(nearest_rank(&sorted, 1.0 - pi0))
        }
        CutoffRule::EstimatedPi0 => Some(nearest_rank(&sorted, 1.0 - pi0_hat)),
        CutoffRule::Standard => Some(0.2),
        CutoffRule::EstimatedFdr05 => fdr_level_cutoff(fdr_hat, 0.05),
    };
    let (mut td, mut fd) = (0usize, 0usize);
    if let Some(c) = cutoff {
        for (&f, &l) in fdr_hat.iter().zip(labels) {
            if f <= c {
                if l == 1 {
                    td += 1;
                } else {
                    fd += 1;
                }
            }
        }
    }
    let alternatives = labels.iter().filter(|&&l| l == 1).count();
    Ok(ClassificationReport {
        cutoff_rule: rule,
        cutoff,
        global_fdr: if td + fd == 0 { 0.0 } else { fd as f64 / (td + fd) as f64 },
        sensitivity: if alternatives == 0 { 0.0 } else { td as f64 / alternatives as f64 },
        true_discoveries: td,
        false_discoveries: fd,
    })
}
