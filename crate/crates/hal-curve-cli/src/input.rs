//! Headered-CSV ingestion: column mapping, strict numeric parsing, and
//! line-numbered schema diagnostics.
//!
//! The file must be UTF-8 with a header row; every referenced column must
//! exist exactly once; referenced cells must parse as finite numbers.
//! Missing values are rejected outright — the estimator has no
//! missing-data story, so a blank cell is a schema violation, not a
//! quiet NaN.

use crate::config::DataSpec;
use crate::errors::{CliError, CliResult};
use hal_curve::data::Dataset;

fn column_index(headers: &csv::StringRecord, name: &str, input: &str) -> CliResult<usize> {
    let mut hits = headers.iter().enumerate().filter(|(_, h)| *h == name);
    let Some((idx, _)) = hits.next() else {
        return Err(CliError::Schema(format!(
            "{input}: column '{name}' not found in header ({})",
            headers.iter().collect::<Vec<_>>().join(", ")
        )));
    };
    if hits.next().is_some() {
        return Err(CliError::Schema(format!(
            "{input}: column '{name}' appears more than once in the header"
        )));
    }
    Ok(idx)
}

fn parse_cell(raw: &str, column: &str, line: u64, input: &str) -> CliResult<f64> {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return Err(CliError::Schema(format!(
            "{input} line {line}: column '{column}' is missing a value"
        )));
    }
    let value: f64 = trimmed.parse().map_err(|_| {
        CliError::Schema(format!(
            "{input} line {line}: column '{column}' has value '{trimmed}' (expected a number)"
        ))
    })?;
    if !value.is_finite() {
        return Err(CliError::Schema(format!(
            "{input} line {line}: column '{column}' has non-finite value '{trimmed}'"
        )));
    }
    Ok(value)
}

fn parse_indicator(raw: &str, column: &str, line: u64, input: &str) -> CliResult<u8> {
    let value = parse_cell(raw, column, line, input)?;
    if value == 0.0 {
        Ok(0)
    } else if value == 1.0 {
        Ok(1)
    } else {
        Err(CliError::Schema(format!(
            "{input} line {line}: column '{column}' must be 0 or 1, got '{}'",
            raw.trim()
        )))
    }
}

/// Reads the mapped columns of a headered CSV file into a dataset.
pub fn load_dataset(spec: &DataSpec) -> CliResult<Dataset> {
    let input = spec.input.as_str();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(input)
        .map_err(|e| CliError::Schema(format!("cannot read {input}: {e}")))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::Schema(format!("{input}: cannot parse header: {e}")))?
        .clone();
    let y_idx = column_index(&headers, &spec.y, input)?;
    let delta_idx = column_index(&headers, &spec.delta, input)?;
    let a_idx = column_index(&headers, &spec.a, input)?;
    let mut w_idx = Vec::with_capacity(spec.w.len());
    for name in &spec.w {
        w_idx.push(column_index(&headers, name, input)?);
    }
    let role_indices = |names: &[String]| -> Vec<usize> {
        names
            .iter()
            .map(|n| spec.w.iter().position(|w| w == n).expect("validated against w_cols"))
            .collect()
    };
    let s_cols = role_indices(&spec.s);
    let v_cols = role_indices(&spec.v);

    let mut y = Vec::new();
    let mut delta = Vec::new();
    let mut a = Vec::new();
    let mut x = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record =
            record.map_err(|e| CliError::Schema(format!("{input}: malformed row: {e}")))?;
        // Header is line 1, so data row k sits on line k + 1 unless the
        // parser knows better.
        let line = record.position().map_or(row as u64 + 2, |p| p.line());
        let cell = |idx: usize, column: &str| -> CliResult<&str> {
            record.get(idx).ok_or_else(|| {
                CliError::Schema(format!(
                    "{input} line {line}: row has {} fields, column '{column}' needs field {}",
                    record.len(),
                    idx + 1
                ))
            })
        };
        y.push(parse_cell(cell(y_idx, &spec.y)?, &spec.y, line, input)?);
        delta.push(parse_indicator(cell(delta_idx, &spec.delta)?, &spec.delta, line, input)?);
        a.push(parse_indicator(cell(a_idx, &spec.a)?, &spec.a, line, input)?);
        for (&idx, name) in w_idx.iter().zip(&spec.w) {
            x.push(parse_cell(cell(idx, name)?, name, line, input)?);
        }
    }
    if y.is_empty() {
        return Err(CliError::Schema(format!("{input}: no data rows after the header")));
    }
    Dataset::new(y, delta, a, x, spec.w.clone(), s_cols, v_cols)
        .map_err(|e| CliError::Schema(format!("{input}: {e}")))
}
