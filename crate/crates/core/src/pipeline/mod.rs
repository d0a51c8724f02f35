//! The selective-ensemble pipeline: fit the generator, score the grid on
//! synthetic datasets, keep the best `m` models and combine their
//! observed-data estimates. Ablations and estimator diagnostics live here
//! too.

mod diagnostics;
mod ensemble;
mod scoring;

use std::time::{Duration, Instant};

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use diagnostics::{chi2_divergence_1d, objective_variance, DivergenceEstimate};
pub use ensemble::{combine, ensemble, equal_weight, loss_weights, EnsembleResult, SelectedModel};
pub use scoring::{estimate_objectives, select_top, FdrModel, ObjectiveEstimate};

use crate::error::{Error, FitError, Result, Stage};
use crate::estimators::{build_grid, GridConfig, ModelSpec};
use crate::generator::{fit_em, sample_dataset, EmConfig, EmFit, SyntheticDataset};
use crate::model::{check_statistics, FdrFit, NullSpec};
use crate::seed::{derive_seed, rng_for, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SafeConfig {
    /// Number of synthetic datasets `N`.
    pub n_synthetic: usize,
    /// Ensemble size `m`.
    pub ensemble_size: usize,
    /// Length of each synthetic dataset; the observed length when `None`.
    pub synthetic_size: Option<usize>,
    pub seed: u64,
    pub grid: GridConfig,
    pub null: NullSpec,
    pub em: EmConfig,
    /// Worker threads for fitting; 0 uses every available core.
    pub workers: usize,
}

impl Default for SafeConfig {
    fn default() -> Self {
        Self {
            n_synthetic: 10,
            ensemble_size: 10,
            synthetic_size: None,
            seed: 0,
            grid: GridConfig::default(),
            null: NullSpec::StandardNormal,
            em: EmConfig::default(),
            workers: 1,
        }
    }
}

impl SafeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_synthetic == 0 {
            return Err(Error::config("n_synthetic must be at least 1"));
        }
        if self.ensemble_size == 0 {
            return Err(Error::config("ensemble_size must be at least 1"));
        }
        if self.synthetic_size == Some(0) {
            return Err(Error::config("synthetic_size must be positive"));
        }
        self.em.validate()?;
        self.grid.validate()
    }
}

/// Ablations of the full method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ablation {
    /// Best single model by synthetic-data objective.
    SelectionOnly,
    /// Equal weights over `m` models drawn at random.
    AggregationOnly,
    /// Equal weights over every model that fits.
    AggregationAll,
}

/// Runs `f` on a dedicated pool of `workers` threads (0 = all cores).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Generator fit plus `N` synthetic datasets, each on its own seed stream.
pub fn synthesize(u: &[f64], cfg: &SafeConfig) -> Result<(EmFit, Vec<SyntheticDataset>)> {
    let em = fit_em(u, &cfg.em, cfg.seed).map_err(|e| Error::pipeline(Stage::Generator, e.to_string()))?;
    let size = cfg.synthetic_size.unwrap_or(u.len());
    let datasets = (0..cfg.n_synthetic as u64)
        .into_par_iter()
        .map(|n| sample_dataset(&em.params, size, derive_seed(cfg.seed, Stream::SyntheticData, n)))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| Error::pipeline(Stage::Synthesis, e.to_string()))?;
    Ok((em, datasets))
}

/// Fits every model to the observed statistics, in model order.
pub fn fit_observed<M: FdrModel>(models: &[M], u: &[f64], null: NullSpec) -> Vec<std::result::Result<FdrFit, FitError>> {
    models.par_iter().map(|m| m.fit(u, null)).collect()
}

/// Selects the best `m` scored models and ensembles their observed fits.
/// `observed` supplies (or computes) each model's fit on the observed data.
pub fn assemble_safe(
    u: &[f64],
    objectives: Vec<ObjectiveEstimate>,
    m: usize,
    observed: impl Fn(&str) -> std::result::Result<FdrFit, FitError> + Sync,
) -> Result<EnsembleResult> {
    let chosen = select_top(&objectives, m);
    if chosen.is_empty() {
        return Err(Error::pipeline(Stage::Selection, "no eligible models"));
    }
    let components: Vec<_> = chosen
        .par_iter()
        .map(|id| {
            let objective = objectives
                .iter()
                .find(|o| &o.model_id == id)
                .expect("selected from objectives")
                .clone();
            let fit = observed(id);
            (objective, fit)
        })
        .collect();
    let mut result = ensemble(u, components)?;
    result.objectives = objectives;
    Ok(result)
}

/// Equal-weight ensemble of `m` models drawn without replacement from those
/// that fit the observed data.
pub fn assemble_aggregation_only(
    u: &[f64],
    fitted: &[(Option<crate::estimators::Family>, &FdrFit)],
    m: usize,
    seed: u64,
) -> Result<EnsembleResult> {
    if fitted.is_empty() {
        return Err(Error::pipeline(Stage::ObservedFit, "no model fits the observed statistics"));
    }
    let mut rng = rng_for(seed, Stream::AblationSubset, 0);
    let mut picks = sample(&mut rng, fitted.len(), m.min(fitted.len())).into_vec();
    picks.sort_unstable();
    let chosen: Vec<_> = picks.into_iter().map(|i| fitted[i]).collect();
    equal_weight(u, &chosen)
}

/// Stage timings of one run.
pub type Timings = Vec<(Stage, Duration)>;

/// Runs the full method, returning the ensemble and per-stage wall times.
pub fn run_fdrsafe_timed(u: &[f64], cfg: &SafeConfig) -> Result<(EnsembleResult, Timings)> {
    check_statistics(u)?;
    cfg.validate()?;
    let grid = build_grid(&cfg.grid)?;
    with_workers(cfg.workers, || {
        let mut timings = Vec::new();
        let t = Instant::now();
        let (em, datasets) = synthesize(u, cfg)?;
        timings.push((Stage::Synthesis, t.elapsed()));

        let t = Instant::now();
        let objectives = estimate_objectives(&grid, &datasets, cfg.null)?;
        timings.push((Stage::Scoring, t.elapsed()));

        let t = Instant::now();
        let lookup = |id: &str| {
            let spec = grid.iter().find(|s| s.model_id == id).expect("grid member");
            spec.fit(u, cfg.null)
        };
        let mut result = assemble_safe(u, objectives, cfg.ensemble_size, lookup)?;
        result.generator = Some(em);
        timings.push((Stage::Ensemble, t.elapsed()));
        Ok((result, timings))
    })?
}

/// Runs the full method on observed statistics `u`.
pub fn run_fdrsafe(u: &[f64], cfg: &SafeConfig) -> Result<EnsembleResult> {
    run_fdrsafe_timed(u, cfg).map(|(r, _)| r)
}

/// Runs one ablation of the method.
pub fn run_ablation(u: &[f64], cfg: &SafeConfig, variant: Ablation) -> Result<EnsembleResult> {
    match variant {
        Ablation::SelectionOnly => {
            let cfg = SafeConfig {
                ensemble_size: 1,
                ..cfg.clone()
            };
            run_fdrsafe(u, &cfg)
        }
        Ablation::AggregationOnly | Ablation::AggregationAll => {
            check_statistics(u)?;
            cfg.validate()?;
            let grid = build_grid(&cfg.grid)?;
            with_workers(cfg.workers, || {
                let fits = fit_observed(&grid, u, cfg.null);
                let fitted: Vec<_> = grid
                    .iter()
                    .zip(&fits)
                    .filter_map(|(s, f)| f.as_ref().ok().map(|f| (Some(s.family()), f)))
                    .collect();
                if variant == Ablation::AggregationAll {
                    equal_weight(u, &fitted)
                } else {
                    assemble_aggregation_only(u, &fitted, cfg.ensemble_size, cfg.seed)
                }
            })?
        }
    }
}

/// Convenience for callers holding a grid already.
pub fn grid_for(cfg: &SafeConfig) -> Result<Vec<ModelSpec>> {
    build_grid(&cfg.grid)
}
