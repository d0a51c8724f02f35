//! Domain vectors and the elementary two-group quantities: p-values under a
//! theoretical null, tail-area Fdr from local fdr, empirical Fdr from known
//! labels, and the squared-error loss used to score estimators.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Smallest p-value handed to any log or probit transform.
pub const PVALUE_FLOOR: f64 = 1e-300;

/// Observed two-sided test statistics. Index `i` is the identity of
/// hypothesis `i` everywhere downstream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct StatVector(Vec<f64>);

/// At least two statistics, all finite.
pub(crate) fn check_statistics(u: &[f64]) -> Result<()> {
    if u.len() < 2 {
        return Err(Error::input(format!("need at least 2 statistics, got {}", u.len())));
    }
    if let Some(i) = u.iter().position(|x| !x.is_finite()) {
        return Err(Error::input(format!("statistic {i} is not finite")));
    }
    Ok(())
}

impl StatVector {
    pub fn new(u: Vec<f64>) -> Result<Self> {
        check_statistics(&u)?;
        Ok(Self(u))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Deref for StatVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for StatVector {
    type Error = Error;
    fn try_from(u: Vec<f64>) -> Result<Self> {
        StatVector::new(u)
    }
}

impl From<StatVector> for Vec<f64> {
    fn from(u: StatVector) -> Self {
        u.0
    }
}

/// Null distribution of a single statistic, centred at zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NullSpec {
    #[default]
    StandardNormal,
    StudentT {
        df: f64,
    },
}

impl NullSpec {
    /// `Some(df)` selects a t null, `None` the standard normal.
    pub fn from_df(df: Option<f64>) -> Result<Self> {
        match df {
            None => Ok(NullSpec::StandardNormal),
            Some(df) if df > 0.0 && df.is_finite() => Ok(NullSpec::StudentT { df }),
            Some(df) => Err(Error::input(format!(
                "degrees of freedom must be positive, got {df}"
            ))),
        }
    }

    /// Upper tail probability P(U > x).
    pub fn sf(&self, x: f64) -> f64 {
        match *self {
            NullSpec::StandardNormal => 0.5 * libm::erfc(x / std::f64::consts::SQRT_2),
            NullSpec::StudentT { df } => StudentsT::new(0.0, 1.0, df)
                .expect("df validated positive")
                .sf(x),
        }
    }
}

/// Two-sided p-values `2 (1 - F(|u_i|))`, floored at [`PVALUE_FLOOR`].
pub fn to_pvalues(u: &[f64], null: NullSpec) -> Result<Vec<f64>> {
    if let NullSpec::StudentT { df } = null {
        if !(df > 0.0 && df.is_finite()) {
            return Err(Error::input(format!("invalid t degrees of freedom {df}")));
        }
    }
    u.iter()
        .enumerate()
        .map(|(i, &x)| {
            if !x.is_finite() {
                return Err(Error::input(format!("statistic {i} is not finite")));
            }
            Ok((2.0 * null.sf(x.abs())).clamp(PVALUE_FLOOR, 1.0))
        })
        .collect()
}

fn check_lengths(a: usize, b: usize, what: &str) -> Result<()> {
    if a != b {
        return Err(Error::input(format!("{what}: length mismatch ({a} vs {b})")));
    }
    Ok(())
}

/// Indices grouped by equal `|u|`, most extreme group first.
fn tail_groups(u: &[f64]) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..u.len()).collect();
    order.sort_by(|&a, &b| u[b].abs().total_cmp(&u[a].abs()).then(a.cmp(&b)));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in order {
        match groups.last_mut() {
            Some(g) if u[g[0]].abs() == u[i].abs() => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    groups
}

/// Tail-area Fdr: for each `i`, the mean of `values` over
/// `{i' : |u_i'| >= |u_i|}`. Ties in `|u|` share one tail set.
fn tail_means(u: &[f64], values: impl Fn(usize) -> f64) -> Vec<f64> {
    let mut out = vec![0.0; u.len()];
    let mut sum = 0.0;
    let mut count = 0usize;
    for group in tail_groups(u) {
        for &i in &group {
            sum += values(i);
        }
        count += group.len();
        let mean = sum / count as f64;
        for &i in &group {
            out[i] = mean;
        }
    }
    out
}

/// Converts local fdr estimates into tail-area Fdr estimates.
pub fn local_to_tail_fdr(u: &[f64], fdr: &[f64]) -> Result<Vec<f64>> {
    check_lengths(u.len(), fdr.len(), "local_to_tail_fdr")?;
    Ok(tail_means(u, |i| fdr[i]).into_iter().map(|x| x.clamp(0.0, 1.0)).collect())
}

/// Realised Fdr given true labels (`1` = alternative): the null fraction of
/// each tail set.
pub fn empirical_tail_fdr(u: &[f64], labels: &[u8]) -> Result<Vec<f64>> {
    check_lengths(u.len(), labels.len(), "empirical_tail_fdr")?;
    if labels.iter().any(|&l| l > 1) {
        return Err(Error::input("labels must be 0 or 1"));
    }
    Ok(tail_means(u, |i| f64::from(1 - labels[i])))
}

/// Mean squared error between estimated and true fdr vectors.
pub fn mse_loss(fdr_hat: &[f64], fdr_true: &[f64]) -> Result<f64> {
    check_lengths(fdr_hat.len(), fdr_true.len(), "mse_loss")?;
    if fdr_hat.is_empty() {
        return Err(Error::input("mse_loss of empty vectors"));
    }
    let sse: f64 = fdr_hat
        .iter()
        .zip(fdr_true)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sse / fdr_hat.len() as f64)
}

/// Output of one fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdrFit {
    pub model_id: String,
    pub pi0: f64,
    pub fdr: Vec<f64>,
    /// Tail-area Fdr derived from `fdr`.
    pub tail_fdr: Vec<f64>,
}

impl FdrFit {
    /// Clamps `fdr` and `pi0` into `[0, 1]` and derives the tail-area Fdr.
    pub fn new(model_id: impl Into<String>, u: &[f64], pi0: f64, mut fdr: Vec<f64>) -> Result<Self> {
        for v in fdr.iter_mut() {
            *v = v.clamp(0.0, 1.0);
        }
        let tail_fdr = local_to_tail_fdr(u, &fdr)?;
        Ok(Self {
            model_id: model_id.into(),
            pi0: pi0.clamp(0.0, 1.0),
            fdr,
            tail_fdr,
        })
    }
}
