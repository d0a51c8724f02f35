use std::fs::File;
use std::path::{Path, PathBuf};

use clap::Args;
use fdrsafe::pipeline::SafeConfig;
use fdrsafe::sim::{run_study_with_bins, Method, ScenarioSpec, StudyResult};
use serde::Serialize;

use crate::config::load;
use crate::error::{io_context, CliError, CliResult};

/// Metrics reported as columns of `summary.csv`, in order.
pub const SUMMARY_METRICS: [&str; 7] = ["fdr_rmse", "Fdr_rmse", "brier", "pr_auc", "roc_auc", "pi0_hat", "pi0_error"];

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Built-in scenario: symmetric, asymmetric or correlated.
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    pub scenario: Option<String>,
    /// Scenario file (TOML or JSON).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    pub reps: usize,
    /// Comma-separated methods; all when absent.
    #[arg(long, value_delimiter = ',')]
    pub methods: Vec<String>,
    #[arg(long, env = "FDRSAFE_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Override the number of hypotheses.
    #[arg(long)]
    pub size: Option<usize>,
    /// Override the null proportion.
    #[arg(long)]
    pub pi0: Option<f64>,
    #[arg(long, default_value_t = 10)]
    pub n_synthetic: usize,
    #[arg(long, default_value_t = 10)]
    pub ensemble_size: usize,
    /// Model grid file (TOML or JSON).
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Interior bins of the local calibration curve.
    #[arg(long, default_value_t = 20)]
    pub bins: usize,
    /// Output directory (created if missing).
    #[arg(long, short, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct SimManifest<'a> {
    tool: &'static str,
    version: &'static str,
    seed: u64,
    scenario: &'a ScenarioSpec,
    reps: usize,
    methods: Vec<&'static str>,
    calibration_bins: usize,
    config: &'a SafeConfig,
    files: &'a [&'a str],
}

const FILES: [&str; 6] = [
    "metrics.csv",
    "summary.csv",
    "calibration_local.csv",
    "calibration_global.csv",
    "family_share.csv",
    "failures.csv",
];

fn scenario(args: &SimulateArgs) -> CliResult<ScenarioSpec> {
    let mut spec = match (&args.scenario, &args.config) {
        (Some(name), _) => ScenarioSpec::by_name(name)
            .ok_or_else(|| CliError::input(format!("unknown scenario {name:?} (symmetric, asymmetric, correlated)")))?,
        (None, Some(path)) => load(path)?,
        (None, None) => return Err(CliError::input("either --scenario or --config is required")),
    };
    if let Some(size) = args.size {
        spec.size = size;
    }
    if let Some(pi0) = args.pi0 {
        spec.pi0 = pi0;
    }
    spec.validate()?;
    Ok(spec)
}

fn methods(names: &[String]) -> CliResult<Vec<Method>> {
    if names.is_empty() {
        return Ok(Method::ALL.to_vec());
    }
    names
        .iter()
        .map(|n| {
            Method::parse(n.trim()).ok_or_else(|| {
                let known: Vec<_> = Method::ALL.iter().map(Method::name).collect();
                CliError::input(format!("unknown method {n:?}; known: {}", known.join(", ")))
            })
        })
        .collect()
}

fn writer(dir: &Path, name: &str) -> CliResult<csv::Writer<File>> {
    let path = dir.join(name);
    let file = File::create(&path).map_err(|e| io_context(&path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::input(format!("writing CSV: {e}"))
}

fn write_tables(dir: &Path, study: &StudyResult, methods: &[Method]) -> CliResult<()> {
    let mut w = writer(dir, "metrics.csv")?;
    w.write_record(["method", "rep", "metric", "value"]).map_err(csv_err)?;
    for r in &study.rows {
        w.write_record([r.method.name(), &r.rep.to_string(), &r.metric, &r.value.to_string()])
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::input(e.to_string()))?;

    let mut w = writer(dir, "summary.csv")?;
    let mut header = vec!["method", "reps"];
    header.extend(SUMMARY_METRICS);
    w.write_record(&header).map_err(csv_err)?;
    for &m in methods {
        let reps = study
            .summary
            .iter()
            .filter(|s| s.method == m)
            .map(|s| s.n)
            .max()
            .unwrap_or(0);
        let mut row = vec![m.name().to_string(), reps.to_string()];
        row.extend(
            SUMMARY_METRICS
                .iter()
                .map(|metric| study.median(m, metric).map(|v| v.to_string()).unwrap_or_default()),
        );
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::input(e.to_string()))?;

    let mut local = writer(dir, "calibration_local.csv")?;
    let mut global = writer(dir, "calibration_global.csv")?;
    for w in [&mut local, &mut global] {
        w.write_record(["method", "x", "y", "n", "ci_lo", "ci_hi"]).map_err(csv_err)?;
    }
    for c in &study.calibration {
        for (w, curve) in [(&mut local, &c.local), (&mut global, &c.global)] {
            for p in &curve.points {
                w.write_record([
                    c.method.name(),
                    &p.x.to_string(),
                    &p.y.to_string(),
                    &p.n.to_string(),
                    &p.ci_lo.to_string(),
                    &p.ci_hi.to_string(),
                ])
                .map_err(csv_err)?;
            }
        }
    }
    local.flush().map_err(|e| CliError::input(e.to_string()))?;
    global.flush().map_err(|e| CliError::input(e.to_string()))?;

    let mut w = writer(dir, "family_share.csv")?;
    w.write_record(["family", "selected", "share"]).map_err(csv_err)?;
    for s in &study.family_share {
        w.write_record([s.family.name(), &s.selected.to_string(), &s.share.to_string()])
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::input(e.to_string()))?;

    let mut w = writer(dir, "failures.csv")?;
    w.write_record(["method", "rep", "message"]).map_err(csv_err)?;
    for f in &study.failures {
        w.write_record([f.method.name(), &f.rep.to_string(), &f.message])
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::input(e.to_string()))
}

pub fn run(args: SimulateArgs) -> CliResult<()> {
    let spec = scenario(&args)?;
    let mut methods = methods(&args.methods)?;
    methods.sort();
    methods.dedup();
    let mut cfg = SafeConfig {
        n_synthetic: args.n_synthetic,
        ensemble_size: args.ensemble_size,
        seed: args.seed,
        workers: args.workers,
        null: spec.null(),
        ..SafeConfig::default()
    };
    if let Some(path) = &args.grid {
        cfg.grid = load(path)?;
    }
    cfg.validate()?;
    if args.reps == 0 {
        return Err(CliError::input("--reps must be at least 1"));
    }
    if args.bins == 0 {
        return Err(CliError::input("--bins must be at least 1"));
    }
    std::fs::create_dir_all(&args.out).map_err(|e| io_context(&args.out, e))?;

    let study = run_study_with_bins(&spec, args.reps, &methods, &cfg, args.bins)?;
    write_tables(&args.out, &study, &methods)?;

    let manifest = SimManifest {
        tool: "fdrsafe",
        version: env!("CARGO_PKG_VERSION"),
        seed: args.seed,
        scenario: &spec,
        reps: args.reps,
        methods: methods.iter().map(Method::name).collect(),
        calibration_bins: args.bins,
        config: &cfg,
        files: &FILES,
    };
    let path = args.out.join("manifest.json");
    let mut text = serde_json::to_vec_pretty(&manifest).map_err(|e| CliError::input(e.to_string()))?;
    text.push(b'\n');
    std::fs::write(&path, text).map_err(|e| io_context(&path, e))
}
