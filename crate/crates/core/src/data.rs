//! CSV dataset and result-file handling.
//!
//! Datasets are plain CSV with a header row and one instance per row. For
//! labeled datasets (the `cluster` command) the last column is the outcome;
//! everything else is a feature. R^2 curves are written as
//! `groups_remaining,r2` rows from all-singletons down to one group.

use crate::model::Instance;
use serde::Serialize;
use std::fs;
use std::io;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("failed to read data file: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("data file has a header but no rows")]
    Empty,
    #[error("row {row}, column `{column}`: cannot parse `{value}` as a number")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },
    #[error("a labeled dataset needs at least 2 columns (features, then outcome)")]
    TooFewColumns,
}

/// A dataset where the last CSV column is the prediction target.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    /// Feature column names (outcome column name not included).
    pub feature_names: Vec<String>,
    pub instances: Vec<Instance>,
    pub outcomes: Vec<f64>,
}

fn parse_rows(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>), DataError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let mut row = Vec::with_capacity(header.len());
        for (field, name) in record.iter().zip(&header) {
            let value = field.trim();
            row.push(value.parse::<f64>().map_err(|_| DataError::Parse {
                row: i + 1,
                column: name.clone(),
                value: value.to_string(),
            })?);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(DataError::Empty);
    }
    Ok((header, rows))
}

/// Reads a feature-only dataset: every column is a feature.
pub fn read_instances_csv<P: AsRef<Path>>(
    path: P,
) -> Result<(Vec<String>, Vec<Instance>), DataError> {
    let text = fs::read_to_string(path)?;
    let (header, rows) = parse_rows(&text)?;
    Ok((header, rows.into_iter().map(Instance::new).collect()))
}

/// Reads a labeled dataset: last column is the outcome.
pub fn read_labeled_csv<P: AsRef<Path>>(path: P) -> Result<LabeledDataset, DataError> {
    let text = fs::read_to_string(path)?;
    let (mut header, rows) = parse_rows(&text)?;
    if header.len() < 2 {
        return Err(DataError::TooFewColumns);
    }
    header.pop();
    let mut instances = Vec::with_capacity(rows.len());
    let mut outcomes = Vec::with_capacity(rows.len());
    for mut row in rows {
        outcomes.push(row.pop().expect("csv reader enforces equal row widths"));
        instances.push(Instance::new(row));
    }
    Ok(LabeledDataset {
        feature_names: header,
        instances,
        outcomes,
    })
}

/// Renders a labeled dataset as CSV text (features, then an `outcome` column).
pub fn labeled_csv_string(
    feature_names: &[String],
    instances: &[Instance],
    outcomes: &[f64],
) -> String {
    let mut out = String::new();
    for name in feature_names {
        out.push_str(name);
        out.push(',');
    }
    out.push_str("outcome\n");
    for (x, y) in instances.iter().zip(outcomes) {
        for v in x.features() {
            out.push_str(&format!("{v},"));
        }
        out.push_str(&format!("{y}\n"));
    }
    out
}

pub fn write_labeled_csv<P: AsRef<Path>>(
    path: P,
    feature_names: &[String],
    instances: &[Instance],
    outcomes: &[f64],
) -> Result<(), DataError> {
    fs::write(path, labeled_csv_string(feature_names, instances, outcomes))?;
    Ok(())
}

/// Renders an R^2 curve as `groups_remaining,r2` rows, read from `n` groups
/// down to 1 (`curve[k]` holds the value with `k + 1` groups remaining).
pub fn curve_csv_string(curve: &[f64]) -> String {
    let mut out = String::from("groups_remaining,r2\n");
    for k in (0..curve.len()).rev() {
        out.push_str(&format!("{},{}\n", k + 1, curve[k]));
    }
    out
}

/// Renders a row-per-instance matrix (attributions or raw features) as CSV.
pub fn matrix_csv_string(column_names: &[String], matrix: &[Vec<f64>]) -> String {
    let mut out = String::new();
    out.push_str(&column_names.join(","));
    out.push('\n');
    for row in matrix {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Default feature names `f0..f{n-1}` for generated files.
pub fn default_feature_names(num_features: usize) -> Vec<String> {
    (0..num_features).map(|i| format!("f{i}")).collect()
}

/// JSON serialization that formats floats with the shortest representation
/// that parses back to the identical bits. The stock serde_json formatter in
/// this toolchain drops the final bit on a sizable fraction of doubles,
/// which would break round-trip identity of model files and the
/// byte-determinism of result artifacts.
struct ExactFloats;

impl serde_json::ser::Formatter for ExactFloats {
    fn write_f64<W: io::Write + ?Sized>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value}")
    }

    fn write_f32<W: io::Write + ?Sized>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        write!(writer, "{value}")
    }
}

/// Serializes a value as compact JSON with bit-exact float formatting.
pub fn to_json_exact<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, ExactFloats);
    value
        .serialize(&mut ser)
        .expect("JSON serialization of plain data cannot fail");
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}
