use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use fdrsafe::generator::GeneratorParams;
use fdrsafe::pipeline::{run_fdrsafe_timed, EnsembleResult, SafeConfig, SelectedModel};
use fdrsafe::{NullSpec, StatVector};
use serde::Serialize;

use crate::config::{load, load_pipeline_config};
use crate::error::{io_context, CliError, CliResult};
use crate::input::read_statistics;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Args, Debug)]
pub struct RunArgs {
    /// CSV file with a header and a `statistic` column.
    pub input: PathBuf,
    /// Use a t null with this many degrees of freedom (standard normal otherwise).
    #[arg(long)]
    pub df: Option<f64>,
    /// Number of synthetic datasets used to score the grid.
    #[arg(long)]
    pub n_synthetic: Option<usize>,
    /// Number of models kept in the ensemble.
    #[arg(long)]
    pub ensemble_size: Option<usize>,
    /// Length of each synthetic dataset (defaults to the input length).
    #[arg(long)]
    pub synthetic_size: Option<usize>,
    #[arg(long, env = "FDRSAFE_SEED")]
    pub seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Model grid file (TOML or JSON).
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// Full pipeline config, or a previous result JSON to replay its manifest.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Result JSON path; stdout when absent.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Also write per-stage wall times to this JSON file.
    #[arg(long)]
    pub timings: Option<PathBuf>,
}

#[derive(Serialize)]
struct Record {
    index: usize,
    u: f64,
    fdr_hat: f64,
    #[serde(rename = "Fdr_hat")]
    tail_fdr_hat: f64,
}

#[derive(Serialize)]
struct Excluded {
    model_id: String,
    stage: &'static str,
    reason: String,
}

#[derive(Serialize)]
struct GeneratorSummary {
    params: GeneratorParams,
    log_likelihood: f64,
    iterations: usize,
    converged: bool,
}

#[derive(Serialize)]
struct InputDigest {
    sha256: String,
    rows: usize,
}

#[derive(Serialize)]
struct RunManifest {
    tool: &'static str,
    version: &'static str,
    seed: u64,
    input: InputDigest,
    config: SafeConfig,
}

#[derive(Serialize)]
struct RunOutput {
    schema_version: u32,
    pi0_hat: f64,
    records: Vec<Record>,
    selected: Vec<SelectedModel>,
    excluded: Vec<Excluded>,
    generator: Option<GeneratorSummary>,
    manifest: RunManifest,
}

pub fn resolve_config(args: &RunArgs) -> CliResult<SafeConfig> {
    let mut cfg = match &args.config {
        Some(path) => load_pipeline_config(path)?,
        None => SafeConfig::default(),
    };
    if let Some(path) = &args.grid {
        cfg.grid = load(path)?;
    }
    if args.df.is_some() {
        cfg.null = NullSpec::from_df(args.df)?;
    }
    if let Some(n) = args.n_synthetic {
        cfg.n_synthetic = n;
    }
    if let Some(m) = args.ensemble_size {
        cfg.ensemble_size = m;
    }
    if args.synthetic_size.is_some() {
        cfg.synthetic_size = args.synthetic_size;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn excluded(result: &EnsembleResult) -> Vec<Excluded> {
    let scoring = result.objectives.iter().filter_map(|o| {
        o.excluded.as_ref().map(|reason| Excluded {
            model_id: o.model_id.clone(),
            stage: "scoring",
            reason: reason.clone(),
        })
    });
    let observed = result.dropped.iter().map(|d| Excluded {
        model_id: d.model_id.clone(),
        stage: "observed_fit",
        reason: d.reason.clone(),
    });
    scoring.chain(observed).collect()
}

pub fn write_output(path: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| io_context(p, e)),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| CliError::input(format!("stdout: {e}"))),
    }
}

pub fn run(args: RunArgs) -> CliResult<()> {
    let cfg = resolve_config(&args)?;
    let input = read_statistics(&args.input)?;
    let u = StatVector::new(input.values)?;
    let started = Instant::now();
    let (result, timings) = run_fdrsafe_timed(&u, &cfg)?;
    let total = started.elapsed();

    let records = u
        .iter()
        .zip(&result.fdr)
        .zip(&result.tail_fdr)
        .enumerate()
        .map(|(index, ((&u, &fdr_hat), &tail_fdr_hat))| Record {
            index,
            u,
            fdr_hat,
            tail_fdr_hat,
        })
        .collect();
    let output = RunOutput {
        schema_version: SCHEMA_VERSION,
        pi0_hat: result.pi0,
        records,
        excluded: excluded(&result),
        selected: result.selected.clone(),
        generator: result.generator.as_ref().map(|g| GeneratorSummary {
            params: g.params,
            log_likelihood: g.log_likelihood,
            iterations: g.iterations,
            converged: g.converged,
        }),
        manifest: RunManifest {
            tool: "fdrsafe",
            version: env!("CARGO_PKG_VERSION"),
            seed: cfg.seed,
            input: InputDigest {
                sha256: input.sha256,
                rows: u.len(),
            },
            config: cfg,
        },
    };
    let mut json = serde_json::to_vec_pretty(&output).map_err(|e| CliError::input(e.to_string()))?;
    json.push(b'\n');
    write_output(args.out.as_deref(), &json)?;

    if let Some(path) = &args.timings {
        let stages: Vec<_> = timings
            .iter()
            .map(|(stage, t)| serde_json::json!({ "stage": stage, "seconds": t.as_secs_f64() }))
            .collect();
        let doc = serde_json::json!({ "stages": stages, "total_seconds": total.as_secs_f64() });
        let text = serde_json::to_vec_pretty(&doc).map_err(|e| CliError::input(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| io_context(path, e))?;
    }
    Ok(())
}
