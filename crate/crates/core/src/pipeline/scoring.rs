use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, FitError, Result, Stage};
use crate::estimators::{fit_model, Family, ModelSpec};
use crate::generator::SyntheticDataset;
use crate::model::{mse_loss, FdrFit, NullSpec};

/// Anything that can be fitted to statistics and produce an fdr estimate.
/// Implemented by [`ModelSpec`]; tests substitute fixed-output models.
pub trait FdrModel: Sync {
    fn model_id(&self) -> &str;
    fn family(&self) -> Option<Family> {
        None
    }
    fn fit(&self, u: &[f64], null: NullSpec) -> std::result::Result<FdrFit, FitError>;
}

impl FdrModel for ModelSpec {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn family(&self) -> Option<Family> {
        Some(ModelSpec::family(self))
    }

    fn fit(&self, u: &[f64], null: NullSpec) -> std::result::Result<FdrFit, FitError> {
        fit_model(self, u, null)
    }
}

/// Synthetic-data score of one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveEstimate {
    pub model_id: String,
    pub family: Option<Family>,
    /// One loss per synthetic dataset, in dataset order. Empty when excluded.
    pub per_dataset_losses: Vec<f64>,
    /// Mean of `per_dataset_losses`; `None` when excluded.
    pub l_hat: Option<f64>,
    pub excluded: Option<String>,
}

impl ObjectiveEstimate {
    pub fn is_excluded(&self) -> bool {
        self.excluded.is_some()
    }
}

/// Scores every model on every synthetic dataset. A model that fails on any
/// dataset is excluded. Results come back in model order regardless of how
/// the (model, dataset) pairs were scheduled.
pub fn estimate_objectives<M: FdrModel>(
    models: &[M],
    datasets: &[SyntheticDataset],
    null: NullSpec,
) -> Result<Vec<ObjectiveEstimate>> {
    if datasets.is_empty() {
        return Err(Error::pipeline(Stage::Scoring, "no synthetic datasets"));
    }
    if models.is_empty() {
        return Err(Error::pipeline(Stage::Scoring, "empty model grid"));
    }
    let n = datasets.len();
    let cells: Vec<std::result::Result<f64, String>> = (0..models.len() * n)
        .into_par_iter()
        .map(|cell| {
            let (m, d) = (cell / n, cell % n);
            let data = &datasets[d];
            let fit = models[m].fit(&data.u, null).map_err(|e| e.reason)?;
            mse_loss(&fit.fdr, &data.fdr_true).map_err(|e| e.to_string())
        })
        .collect();
    let objectives: Vec<ObjectiveEstimate> = models
        .iter()
        .enumerate()
        .map(|(m, model)| {
            let row = &cells[m * n..(m + 1) * n];
            let failure = row.iter().enumerate().find_map(|(d, c)| {
                c.as_ref().err().map(|e| format!("synthetic dataset {d}: {e}"))
            });
            match failure {
                Some(reason) => ObjectiveEstimate {
                    model_id: model.model_id().to_string(),
                    family: model.family(),
                    per_dataset_losses: Vec::new(),
                    l_hat: None,
                    excluded: Some(reason),
                },
                None => {
                    let losses: Vec<f64> = row.iter().map(|c| *c.as_ref().unwrap()).collect();
                    let l_hat = losses.iter().sum::<f64>() / n as f64;
                    ObjectiveEstimate {
                        model_id: model.model_id().to_string(),
                        family: model.family(),
                        per_dataset_losses: losses,
                        l_hat: Some(l_hat),
                        excluded: None,
                    }
                }
            }
        })
        .collect();
    if objectives.iter().all(ObjectiveEstimate::is_excluded) {
        return Err(Error::pipeline(
            Stage::Scoring,
            "every model failed on the synthetic data",
        ));
    }
    Ok(objectives)
}

/// Ids of the `m` best non-excluded models, ascending by `L̂` with ties
/// broken by model id.
pub fn select_top(objectives: &[ObjectiveEstimate], m: usize) -> Vec<String> {
    let mut ranked: Vec<(&str, f64)> = objectives
        .iter()
        .filter_map(|o| o.l_hat.map(|l| (o.model_id.as_str(), l)))
        .collect();
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(b.0)));
    ranked.into_iter().take(m).map(|(id, _)| id.to_string()).collect()
}
