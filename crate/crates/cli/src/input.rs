use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{io_context, CliError, CliResult};

pub const STATISTIC_COLUMN: &str = "statistic";

pub struct Statistics {
    pub values: Vec<f64>,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Reads the `statistic` column of a headed CSV. Other columns are ignored;
/// row `k` of the input becomes record index `k` of the output.
pub fn read_statistics(path: &Path) -> CliResult<Statistics> {
    let bytes = std::fs::read(path).map_err(|e| io_context(path, e))?;
    let values = parse_statistics(&bytes)?;
    Ok(Statistics {
        values,
        sha256: sha256_hex(&bytes),
    })
}

pub fn parse_statistics(bytes: &[u8]) -> CliResult<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
    let line_of = |pos: Option<&csv::Position>| pos.map_or(1, |p| p.line());
    let headers = reader
        .headers()
        .map_err(|e| CliError::input(format!("line {}: {e}", line_of(e.position()))))?
        .clone();
    if headers.is_empty() || headers.iter().all(str::is_empty) {
        return Err(CliError::input("line 1: input is empty; expected a header with a `statistic` column"));
    }
    let col = headers
        .iter()
        .position(|h| h == STATISTIC_COLUMN)
        .ok_or_else(|| CliError::input(format!("line 1: no `{STATISTIC_COLUMN}` column in header")))?;
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::input(format!("line {}: {e}", line_of(e.position()))))?;
        let line = line_of(record.position());
        let field = record
            .get(col)
            .ok_or_else(|| CliError::input(format!("line {line}: missing `{STATISTIC_COLUMN}` field")))?;
        let v: f64 = field
            .parse()
            .map_err(|_| CliError::input(format!("line {line}: cannot parse {field:?} as a number")))?;
        if !v.is_finite() {
            return Err(CliError::input(format!("line {line}: statistic must be finite, got {field}")));
        }
        values.push(v);
    }
    if values.is_empty() {
        return Err(CliError::input("line 2: no statistics after the header"));
    }
    Ok(values)
}
