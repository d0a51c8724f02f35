use fdrsafe::estimators::{build_grid, Family, GridConfig};
use fdrsafe::generator::{fit_em, sample_dataset, EmConfig, GeneratorParams};
use fdrsafe::pipeline::{run_ablation, run_fdrsafe, Ablation, SafeConfig};
use fdrsafe::sim::{run_study, Method, ScenarioSpec};
use fdrsafe::{Error, Stage, StatVector};

fn observed(size: usize, seed: u64) -> Vec<f64> {
    let phi = GeneratorParams::new(0.8, 1.0, 0.3, 2.0, 3.0).unwrap();
    sample_dataset(&phi, size, seed).unwrap().u
}

fn quick() -> SafeConfig {
    SafeConfig {
        n_synthetic: 2,
        ensemble_size: 4,
        seed: 9,
        ..Default::default()
    }
}

#[test]
fn statistics_are_validated() {
    assert!(matches!(StatVector::new(vec![1.0]), Err(Error::Input(_))));
    assert!(matches!(StatVector::new(vec![1.0, f64::NAN]), Err(Error::Input(_))));
    assert!(matches!(run_fdrsafe(&[0.5, f64::INFINITY, 1.0], &quick()), Err(Error::Input(_))));
}

#[test]
fn bad_configuration_is_rejected_before_any_work() {
    let u = observed(300, 1);
    for cfg in [
        SafeConfig { n_synthetic: 0, ..quick() },
        SafeConfig { ensemble_size: 0, ..quick() },
        SafeConfig { synthetic_size: Some(0), ..quick() },
    ] {
        assert!(matches!(run_fdrsafe(&u, &cfg), Err(Error::Config(_))), "{cfg:?}");
    }
    let mut grid = GridConfig::default();
    grid.grenander.pct0.clear();
    assert!(matches!(build_grid(&grid), Err(Error::Config(_))));
}

#[test]
fn too_few_statistics_fail_in_the_generator_stage() {
    let err = run_fdrsafe(&[0.1, -0.4, 2.0], &quick()).unwrap_err();
    assert!(
        matches!(err, Error::GeneratorFit(_) | Error::Pipeline { stage: Stage::Generator, .. }),
        "{err}"
    );
}

#[test]
fn ensemble_larger_than_grid_uses_every_surviving_model() {
    let u = observed(400, 2);
    let cfg = SafeConfig {
        ensemble_size: 500,
        grid: GridConfig::only(&[Family::GrenanderNull]),
        ..quick()
    };
    let res = run_fdrsafe(&u, &cfg).unwrap();
    let scored = res.objectives.iter().filter(|o| !o.is_excluded()).count();
    assert_eq!(res.selected.len() + res.dropped.len(), scored);
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let u = observed(500, 3);
    let one = run_fdrsafe(&u, &quick()).unwrap();
    let three = run_fdrsafe(&u, &SafeConfig { workers: 3, ..quick() }).unwrap();
    assert_eq!(one, three);
}

#[test]
fn em_ignores_input_order() {
    let u = observed(3000, 4);
    let mut reversed = u.clone();
    reversed.reverse();
    let a = fit_em(&u, &EmConfig::default(), 1).unwrap();
    let b = fit_em(&reversed, &EmConfig::default(), 1).unwrap();
    assert_eq!(a, b);
}

#[test]
fn ablations_respect_their_definitions() {
    let u = observed(400, 5);
    let cfg = quick();
    let single = run_ablation(&u, &cfg, Ablation::SelectionOnly).unwrap();
    assert_eq!(single.selected.len(), 1);
    assert_eq!(single.selected[0].weight, 1.0);

    let all = run_ablation(&u, &cfg, Ablation::AggregationAll).unwrap();
    let w = all.selected[0].weight;
    assert!(all.selected.iter().all(|s| s.weight == w));

    let some = run_ablation(&u, &cfg, Ablation::AggregationOnly).unwrap();
    assert!(some.selected.len() <= cfg.ensemble_size);
    assert_eq!(some, run_ablation(&u, &cfg, Ablation::AggregationOnly).unwrap());
}

#[test]
fn correlated_study_reports_missing_truth_instead_of_failing() {
    let mut scenario = ScenarioSpec::correlated();
    scenario.size = 300;
    let cfg = SafeConfig {
        grid: GridConfig::only(&[Family::GrenanderNull]),
        ..quick()
    };
    let methods = [Method::DefaultG, Method::OracleSingle];
    let study = run_study(&scenario, 2, &methods, &cfg).unwrap();

    assert!(study.values(Method::DefaultG, "fdr_rmse").is_empty());
    assert_eq!(study.values(Method::DefaultG, "roc_auc").len(), 2);
    assert_eq!(study.failures.len(), 2);
    assert!(study.failures.iter().all(|f| f.method == Method::OracleSingle));
    assert_eq!(study, run_study(&scenario, 2, &methods, &cfg).unwrap());
}
