//! Dataset loading, categorical encoding, min-max scaling and synthetic
//! stream generation.

mod encode;
mod nsl_kdd;
mod scale;
mod synth;
mod unsw;

use std::fmt;
use std::io;
use std::path::Path;

use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use encode::{encode, infer_encoding, CategoryMode, ColumnRule, EncodingSpec, LabelMap};
pub use nsl_kdd::{load_nsl_kdd, nsl_kdd_encoding, NSL_KDD_FEATURES};
pub use scale::{apply_minmax, fit_minmax, MinMaxScaler};
pub use synth::{generate_synthetic, SynthConfig};
pub use unsw::{load_unsw_nb15, unsw_nb15_encoding, UNSW_NB15_COLUMNS};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("unknown category {value:?} in column {column:?}")]
    UnknownCategory { column: String, value: String },
    #[error("dimension mismatch: expected {expected} columns, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite value at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },
    #[error("invalid encoding spec: {0}")]
    InvalidEncoding(String),
    #[error("invalid synthetic config: {0}")]
    InvalidConfig(String),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
}

/// Ground truth for one record. `Anomaly` is the positive class everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Normal,
    Anomaly,
}

impl Label {
    pub fn is_anomaly(self) -> bool {
        self == Label::Anomaly
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Normal => "normal",
            Label::Anomaly => "anomaly",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    NslKdd,
    UnswNb15,
    Synthetic,
}

/// One raw field before encoding.
#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Num(f64),
    Cat(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawRecord {
    pub values: Vec<Field>,
    pub label_text: String,
}

/// Records of one file together with the schema they were parsed against.
#[derive(Debug, Clone)]
pub struct RawDataset {
    pub columns: Vec<(String, ColumnKind)>,
    pub records: Vec<RawRecord>,
    pub source: Source,
}

/// `m × n` feature matrix with one ground-truth label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub matrix: Array2<f64>,
    pub labels: Vec<Label>,
    pub feature_names: Vec<String>,
    pub source: Source,
}

impl LabeledDataset {
    pub fn new(
        matrix: Array2<f64>,
        labels: Vec<Label>,
        feature_names: Vec<String>,
        source: Source,
    ) -> Result<Self, IngestError> {
        let (m, n) = matrix.dim();
        if m == 0 {
            return Err(IngestError::EmptyDataset);
        }
        if n == 0 {
            return Err(IngestError::InvalidDataset("no feature columns".into()));
        }
        if labels.len() != m {
            return Err(IngestError::InvalidDataset(format!(
                "{} labels for {} rows",
                labels.len(),
                m
            )));
        }
        if feature_names.len() != n {
            return Err(IngestError::DimensionMismatch {
                expected: n,
                found: feature_names.len(),
            });
        }
        if let Some(((row, column), _)) = matrix.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(IngestError::NonFinite { row, column });
        }
        Ok(Self {
            matrix,
            labels,
            feature_names,
            source,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn anomaly_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_anomaly()).count()
    }

    /// The first `rows` rows, or `None` when the dataset is shorter.
    pub fn head(&self, rows: usize) -> Option<LabeledDataset> {
        if rows == 0 || rows > self.n_samples() {
            return None;
        }
        Some(LabeledDataset {
            matrix: self.matrix.slice(s![..rows, ..]).to_owned(),
            labels: self.labels[..rows].to_vec(),
            feature_names: self.feature_names.clone(),
            source: self.source,
        })
    }

    /// Canonical dump: header is the feature names plus `label`.
    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<(), IngestError> {
        let mut out = csv::Writer::from_writer(writer);
        let mut header = self.feature_names.clone();
        header.push("label".into());
        out.write_record(&header)?;
        for (row, label) in self.matrix.rows().into_iter().zip(&self.labels) {
            let mut fields: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            fields.push(label.as_str().into());
            out.write_record(&fields)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads a file previously written by [`LabeledDataset::write_csv`].
    pub fn read_csv(path: &Path, source: Source) -> Result<Self, IngestError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_path(path)?;
        let header = reader.headers()?.clone();
        if header.len() < 2 || &header[header.len() - 1] != "label" {
            return Err(IngestError::InvalidDataset(
                "expected a header ending in a `label` column".into(),
            ));
        }
        let n = header.len() - 1;
        let feature_names: Vec<String> = header.iter().take(n).map(str::to_owned).collect();
        let mut values = Vec::new();
        let mut labels = Vec::new();
        for record in reader.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line());
            if record.len() != n + 1 {
                return Err(IngestError::MalformedRow {
                    line,
                    reason: format!("expected {} fields, found {}", n + 1, record.len()),
                });
            }
            for field in record.iter().take(n) {
                values.push(
                    parse_number(field).ok_or_else(|| IngestError::MalformedRow {
                        line,
                        reason: format!("not a number: {field:?}"),
                    })?,
                );
            }
            labels.push(match &record[n] {
                "normal" => Label::Normal,
                "anomaly" => Label::Anomaly,
                other => {
                    return Err(IngestError::MalformedRow {
                        line,
                        reason: format!("unknown label {other:?}"),
                    })
                }
            });
        }
        if labels.is_empty() {
            return Err(IngestError::EmptyDataset);
        }
        let matrix = Array2::from_shape_vec((labels.len(), n), values)
            .map_err(|e| IngestError::InvalidDataset(e.to_string()))?;
        Self::new(matrix, labels, feature_names, source)
    }
}

pub(crate) fn parse_number(field: &str) -> Option<f64> {
    field.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Parses every row of a headerless CSV according to `columns`; the caller
/// supplies how to split off the label from the remaining fields.
pub(crate) fn read_rows(path: &Path) -> Result<Vec<(u64, Vec<String>)>, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        rows.push((line, record.iter().map(str::to_owned).collect()));
    }
    Ok(rows)
}

pub(crate) fn parse_fields(
    line: u64,
    fields: &[String],
    columns: &[(String, ColumnKind)],
) -> Result<Vec<Field>, IngestError> {
    fields
        .iter()
        .zip(columns)
        .map(|(raw, (name, kind))| match kind {
            ColumnKind::Numeric => {
                parse_number(raw)
                    .map(Field::Num)
                    .ok_or_else(|| IngestError::MalformedRow {
                        line,
                        reason: format!("column {name:?}: not a number: {raw:?}"),
                    })
            }
            ColumnKind::Categorical => Ok(Field::Cat(raw.clone())),
        })
        .collect()
}
