use std::path::PathBuf;

use clap::{Args, ValueEnum};
use fdrsafe::estimators::{build_grid, GridConfig};
use serde::Serialize;

use crate::config::load;
use crate::error::{CliError, CliResult};
use crate::run::write_output;

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Format {
    Table,
    Json,
}

#[derive(Args, Debug)]
pub struct GridArgs {
    /// Grid file (TOML or JSON); defaults when absent.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
}

#[derive(Serialize)]
struct Listing<'a> {
    count: usize,
    models: Vec<Row<'a>>,
}

#[derive(Serialize)]
struct Row<'a> {
    model_id: &'a str,
    family: &'static str,
    params: std::collections::BTreeMap<String, String>,
}

pub fn run(args: GridArgs) -> CliResult<()> {
    let cfg: GridConfig = match &args.config {
        Some(path) => load(path)?,
        None => GridConfig::default(),
    };
    let grid = build_grid(&cfg)?;
    let text = match args.format {
        Format::Json => {
            let listing = Listing {
                count: grid.len(),
                models: grid
                    .iter()
                    .map(|s| Row {
                        model_id: &s.model_id,
                        family: s.family().name(),
                        params: s.params_table(),
                    })
                    .collect(),
            };
            let mut s = serde_json::to_string_pretty(&listing).map_err(|e| CliError::input(e.to_string()))?;
            s.push('\n');
            s
        }
        Format::Table => {
            let width = grid.iter().map(|s| s.family().name().len()).max().unwrap_or(0);
            let mut s = String::new();
            for spec in &grid {
                s.push_str(&format!("{:<width$}  {}\n", spec.family().name(), spec.model_id));
            }
            s.push_str(&format!("total: {}\n", grid.len()));
            s
        }
    };
    write_output(None, text.as_bytes())
}
