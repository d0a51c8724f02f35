use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scenario::{generate, ScenarioSpec};
use crate::error::{Error, FitError, Result, Stage};
use crate::estimators::{
    build_grid, fit_model, EmpiricalNullParams, Family, FamilyParams, GrenanderParams, ModelSpec, PValueParams,
};
use crate::metrics::{evaluate, global_calibration, local_calibration, CalibrationCurve, DEFAULT_CALIBRATION_BINS};
use crate::model::mse_loss;
use crate::numeric::median;
use crate::pipeline::{
    assemble_aggregation_only, assemble_safe, ensemble, equal_weight, estimate_objectives, fit_observed, select_top,
    synthesize, with_workers, EnsembleResult, ObjectiveEstimate, SafeConfig,
};
use crate::seed::{derive_seed, Stream};
use crate::FdrFit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    FdrSafe,
    SelectionOnly,
    AggregationOnly,
    AggregationAll,
    DefaultL,
    DefaultG,
    DefaultQ,
    OracleSingle,
    OracleEnsemble,
}

impl Method {
    pub const ALL: [Method; 9] = [
        Method::FdrSafe,
        Method::SelectionOnly,
        Method::AggregationOnly,
        Method::AggregationAll,
        Method::DefaultL,
        Method::DefaultG,
        Method::DefaultQ,
        Method::OracleSingle,
        Method::OracleEnsemble,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::FdrSafe => "fdrsafe",
            Method::SelectionOnly => "selection_only",
            Method::AggregationOnly => "aggregation_only",
            Method::AggregationAll => "aggregation_all",
            Method::DefaultL => "default_L",
            Method::DefaultG => "default_G",
            Method::DefaultQ => "default_Q",
            Method::OracleSingle => "oracle_single",
            Method::OracleEnsemble => "oracle_ensemble",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name().eq_ignore_ascii_case(name))
    }

    fn needs_objectives(&self) -> bool {
        matches!(self, Method::FdrSafe | Method::SelectionOnly)
    }

    /// Family default used by the single-family baselines.
    pub fn baseline_spec(&self) -> Option<ModelSpec> {
        let params = match self {
            Method::DefaultL => FamilyParams::EmpiricalNullSpline(EmpiricalNullParams::default()),
            Method::DefaultG => FamilyParams::GrenanderNull(GrenanderParams::default()),
            Method::DefaultQ => FamilyParams::PValueSmoother(PValueParams::default()),
            _ => return None,
        };
        Some(ModelSpec::new(params))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub method: Method,
    pub rep: usize,
    pub metric: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub method: Method,
    pub metric: String,
    pub median: f64,
    /// Repetitions contributing a value.
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyShare {
    pub family: Family,
    pub selected: usize,
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodCalibration {
    pub method: Method,
    /// Pooled over repetitions.
    pub local: CalibrationCurve,
    pub global: CalibrationCurve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyFailure {
    pub method: Method,
    pub rep: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub rows: Vec<MetricRow>,
    pub summary: Vec<MetricSummary>,
    pub family_share: Vec<FamilyShare>,
    pub calibration: Vec<MethodCalibration>,
    pub failures: Vec<StudyFailure>,
}

impl StudyResult {
    pub fn median(&self, method: Method, metric: &str) -> Option<f64> {
        self.summary
            .iter()
            .find(|s| s.method == method && s.metric == metric)
            .map(|s| s.median)
    }

    pub fn values(&self, method: Method, metric: &str) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.method == method && r.metric == metric)
            .map(|r| r.value)
            .collect()
    }
}

/// Per-(method, metric) medians, in first-appearance order of the rows.
pub fn summarize(rows: &[MetricRow]) -> Vec<MetricSummary> {
    let mut groups: Vec<((Method, &str), Vec<f64>)> = Vec::new();
    for row in rows {
        let key = (row.method, row.metric.as_str());
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(row.value),
            None => groups.push((key, vec![row.value])),
        }
    }
    groups
        .into_iter()
        .map(|((method, metric), values)| MetricSummary {
            method,
            metric: metric.to_string(),
            median: median(&values),
            n: values.len(),
        })
        .collect()
}

/// Ground-truth oracles over already fitted models: the single model with the
/// smallest true loss, and the loss-weighted ensemble of the best `m`.
pub fn oracle_methods(
    u: &[f64],
    fdr_true: &[f64],
    fitted: &[(Option<Family>, &FdrFit)],
    m: usize,
) -> Result<(EnsembleResult, EnsembleResult)> {
    if fitted.is_empty() {
        return Err(Error::pipeline(Stage::ObservedFit, "no fitted models for the oracle"));
    }
    let objectives = fitted
        .iter()
        .map(|(family, fit)| {
            let loss = mse_loss(&fit.fdr, fdr_true)?;
            Ok(ObjectiveEstimate {
                model_id: fit.model_id.clone(),
                family: *family,
                per_dataset_losses: vec![loss],
                l_hat: Some(loss),
                excluded: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let build = |k: usize| {
        let components = select_top(&objectives, k)
            .into_iter()
            .map(|id| {
                let pos = objectives.iter().position(|o| o.model_id == id).expect("selected id");
                (objectives[pos].clone(), Ok(fitted[pos].1.clone()))
            })
            .collect();
        ensemble(u, components).map(|mut r| {
            r.objectives = objectives.clone();
            r
        })
    };
    Ok((build(1)?, build(m.max(1))?))
}

struct RepOutcome {
    rows: Vec<MetricRow>,
    failures: Vec<StudyFailure>,
    fdrsafe_families: Vec<Family>,
    predictions: Vec<(Method, Vec<f64>)>,
    labels: Vec<u8>,
}

fn as_fit(method: Method, r: EnsembleResult) -> FdrFit {
    FdrFit {
        model_id: method.name().to_string(),
        pi0: r.pi0,
        fdr: r.fdr,
        tail_fdr: r.tail_fdr,
    }
}

fn run_rep(scenario: &ScenarioSpec, rep: usize, methods: &[Method], cfg: &SafeConfig, grid: &[ModelSpec]) -> RepOutcome {
    let seed = derive_seed(cfg.seed, Stream::Repetition, rep as u64);
    let mut out = RepOutcome {
        rows: Vec::new(),
        failures: Vec::new(),
        fdrsafe_families: Vec::new(),
        predictions: Vec::new(),
        labels: Vec::new(),
    };
    let fail_all = |out: &mut RepOutcome, message: String| {
        for &method in methods {
            out.failures.push(StudyFailure {
                method,
                rep,
                message: message.clone(),
            });
        }
    };
    let data = match generate(scenario, seed) {
        Ok(d) => d,
        Err(e) => {
            fail_all(&mut out, e.to_string());
            return out;
        }
    };
    let u = &data.u;
    let rep_cfg = SafeConfig {
        seed,
        null: scenario.null(),
        ..cfg.clone()
    };
    let null = rep_cfg.null;

    let needs_grid_fits = methods.iter().any(|m| m.baseline_spec().is_none());
    let observed = if needs_grid_fits { fit_observed(grid, u, null) } else { Vec::new() };
    let fitted: Vec<(Option<Family>, &FdrFit)> = grid
        .iter()
        .zip(&observed)
        .filter_map(|(s, f)| f.as_ref().ok().map(|f| (Some(s.family()), f)))
        .collect();
    let lookup = |id: &str| -> std::result::Result<FdrFit, FitError> {
        let pos = grid.iter().position(|s| s.model_id == id).expect("grid member");
        observed[pos].clone()
    };
    let objectives: Option<Result<Vec<ObjectiveEstimate>>> = methods.iter().any(Method::needs_objectives).then(|| {
        let (_, datasets) = synthesize(u, &rep_cfg)?;
        estimate_objectives(grid, &datasets, null)
    });
    let objectives = || -> Result<Vec<ObjectiveEstimate>> {
        objectives.clone().expect("computed when needed")
    };
    let mut oracles: Option<Result<(EnsembleResult, EnsembleResult)>> = None;

    for &method in methods {
        let result: Result<FdrFit> = match method {
            Method::FdrSafe => objectives()
                .and_then(|o| assemble_safe(u, o, rep_cfg.ensemble_size, lookup))
                .map(|r| {
                    out.fdrsafe_families.extend(r.selected.iter().filter_map(|s| s.family));
                    as_fit(method, r)
                }),
            Method::SelectionOnly => objectives()
                .and_then(|o| assemble_safe(u, o, 1, lookup))
                .map(|r| as_fit(method, r)),
            Method::AggregationOnly => {
                assemble_aggregation_only(u, &fitted, rep_cfg.ensemble_size, seed).map(|r| as_fit(method, r))
            }
            Method::AggregationAll => equal_weight(u, &fitted).map(|r| as_fit(method, r)),
            Method::DefaultL | Method::DefaultG | Method::DefaultQ => {
                let spec = method.baseline_spec().expect("baseline");
                fit_model(&spec, u, null).map_err(Error::from).map(|mut f| {
                    f.model_id = method.name().to_string();
                    f
                })
            }
            Method::OracleSingle | Method::OracleEnsemble => match &data.fdr_true {
                None => Err(Error::input("oracles need the true fdr")),
                Some(truth) => {
                    let pair = oracles
                        .get_or_insert_with(|| oracle_methods(u, truth, &fitted, rep_cfg.ensemble_size))
                        .clone();
                    pair.map(|(single, multi)| {
                        as_fit(method, if method == Method::OracleSingle { single } else { multi })
                    })
                }
            },
        };
        match result.and_then(|fit| evaluate(&fit, u, &data.labels, data.fdr_true.as_deref()).map(|r| (fit, r))) {
            Ok((fit, report)) => {
                for (metric, value) in report.named() {
                    out.rows.push(MetricRow {
                        method,
                        rep,
                        metric: metric.to_string(),
                        value,
                    });
                }
                out.predictions.push((method, fit.fdr));
            }
            Err(e) => out.failures.push(StudyFailure {
                method,
                rep,
                message: e.to_string(),
            }),
        }
    }
    out.labels = data.labels;
    out
}

/// Runs every method on `reps` simulated datasets. Repetition `r` uses the
/// seed derived from `(cfg.seed, r)`, so the result depends only on the
/// arguments. Method failures become missing rows plus a failure record.
pub fn run_study(scenario: &ScenarioSpec, reps: usize, methods: &[Method], cfg: &SafeConfig) -> Result<StudyResult> {
    run_study_with_bins(scenario, reps, methods, cfg, DEFAULT_CALIBRATION_BINS)
}

pub fn run_study_with_bins(
    scenario: &ScenarioSpec,
    reps: usize,
    methods: &[Method],
    cfg: &SafeConfig,
    calibration_bins: usize,
) -> Result<StudyResult> {
    if reps == 0 {
        return Err(Error::config("a study needs at least one repetition"));
    }
    if methods.is_empty() {
        return Err(Error::config("a study needs at least one method"));
    }
    scenario.validate()?;
    cfg.validate()?;
    let mut methods = methods.to_vec();
    methods.sort();
    methods.dedup();
    let grid = build_grid(&cfg.grid)?;
    let outcomes: Vec<RepOutcome> = with_workers(cfg.workers, || {
        (0..reps)
            .into_par_iter()
            .map(|r| run_rep(scenario, r, &methods, cfg, &grid))
            .collect()
    })?;

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut family_counts: BTreeMap<Family, usize> = BTreeMap::new();
    let mut pooled: BTreeMap<Method, (Vec<f64>, Vec<u8>)> = BTreeMap::new();
    for outcome in outcomes {
        rows.extend(outcome.rows);
        failures.extend(outcome.failures);
        for f in outcome.fdrsafe_families {
            *family_counts.entry(f).or_default() += 1;
        }
        for (method, fdr) in outcome.predictions {
            let entry = pooled.entry(method).or_default();
            entry.0.extend(fdr);
            entry.1.extend(&outcome.labels);
        }
    }
    let total: usize = family_counts.values().sum();
    let family_share = if total == 0 {
        Vec::new()
    } else {
        Family::ALL
            .iter()
            .map(|&family| {
                let selected = family_counts.get(&family).copied().unwrap_or(0);
                FamilyShare {
                    family,
                    selected,
                    share: selected as f64 / total as f64,
                }
            })
            .collect()
    };
    let calibration = pooled
        .into_iter()
        .map(|(method, (fdr, labels))| MethodCalibration {
            method,
            local: local_calibration(&fdr, &labels, calibration_bins),
            global: global_calibration(&fdr, &labels),
        })
        .collect();
    Ok(StudyResult {
        summary: summarize(&rows),
        rows,
        family_share,
        calibration,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::GridConfig;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(Method::parse(m.name()), Some(m));
        }
    }

    #[test]
    fn single_rep_single_method_has_one_row_per_metric() {
        let cfg = SafeConfig {
            grid: GridConfig::only(&[Family::GrenanderNull]),
            ..Default::default()
        };
        let study = run_study(&ScenarioSpec::symmetric(), 1, &[Method::DefaultG], &cfg).unwrap();
        let mut metrics: Vec<_> = study.rows.iter().map(|r| r.metric.as_str()).collect();
        let n = metrics.len();
        metrics.dedup();
        assert_eq!(metrics.len(), n);
        assert!(n >= 6);
        assert_eq!(study.summary.len(), n);
    }
}
