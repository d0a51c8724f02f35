//! Structured config files: JSON when the extension is `.json`, TOML otherwise.

use std::path::Path;

use serde::de::DeserializeOwned;

use crate::error::{io_context, CliError, CliResult};

pub fn load<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| io_context(path, e))?;
    parse(path, &text)
}

fn parse<T: DeserializeOwned>(path: &Path, text: &str) -> CliResult<T> {
    let bad = |e: String| CliError::input(format!("{}: {e}", path.display()));
    if is_json(path) {
        serde_json::from_str(text).map_err(|e| bad(e.to_string()))
    } else {
        toml::from_str(text).map_err(|e| bad(e.to_string()))
    }
}

pub fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

/// Loads a pipeline config. A previous result JSON is accepted too, in which
/// case its manifest's config is used, so a run can be replayed from its output.
pub fn load_pipeline_config(path: &Path) -> CliResult<fdrsafe::pipeline::SafeConfig> {
    if is_json(path) {
        let text = std::fs::read_to_string(path).map_err(|e| io_context(path, e))?;
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        let inner = match value.get("manifest").and_then(|m| m.get("config")) {
            Some(cfg) => cfg.clone(),
            None => value,
        };
        serde_json::from_value(inner).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
    } else {
        load(path)
    }
}
