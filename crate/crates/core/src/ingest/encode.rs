use std::collections::{BTreeSet, HashSet};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{ColumnKind, Field, IngestError, Label, LabeledDataset, RawDataset};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnRule {
    Passthrough,
    /// One indicator column per category, in list order.
    OneHot(Vec<String>),
}

/// Label strings listed here are `Normal`; every other string is `Anomaly`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelMap {
    pub normal: Vec<String>,
}

impl LabelMap {
    pub fn normal_only<I, S>(labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            normal: labels.into_iter().map(Into::into).collect(),
        }
    }

    pub fn map(&self, text: &str) -> Label {
        if self.normal.iter().any(|n| n == text) {
            Label::Normal
        } else {
            Label::Anomaly
        }
    }
}

/// What to do with a categorical value missing from its column's list.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CategoryMode {
    #[default]
    Strict,
    /// Unknown values encode as an all-zero indicator block.
    Open,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodingSpec {
    pub rules: Vec<ColumnRule>,
    pub labels: LabelMap,
    #[serde(default)]
    pub mode: CategoryMode,
}

impl EncodingSpec {
    pub fn validate(&self) -> Result<(), IngestError> {
        for (i, rule) in self.rules.iter().enumerate() {
            if let ColumnRule::OneHot(categories) = rule {
                if categories.is_empty() {
                    return Err(IngestError::InvalidEncoding(format!(
                        "column {i} has an empty category list"
                    )));
                }
                let mut seen = HashSet::new();
                if let Some(dup) = categories.iter().find(|c| !seen.insert(c.as_str())) {
                    return Err(IngestError::InvalidEncoding(format!(
                        "column {i} lists category {dup:?} twice"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn with_mode(mut self, mode: CategoryMode) -> Self {
        self.mode = mode;
        self
    }

    fn output_names(&self, columns: &[(String, ColumnKind)]) -> Vec<String> {
        let mut names = Vec::new();
        for (rule, (name, _)) in self.rules.iter().zip(columns) {
            match rule {
                ColumnRule::Passthrough => names.push(name.clone()),
                ColumnRule::OneHot(categories) => {
                    names.extend(categories.iter().map(|c| format!("{name}={c}")))
                }
            }
        }
        names
    }
}

/// Passthrough for numeric columns, one-hot with the sorted set of observed
/// values for categorical ones.
pub fn infer_encoding(raw: &RawDataset, labels: LabelMap) -> EncodingSpec {
    let rules = raw
        .columns
        .iter()
        .enumerate()
        .map(|(i, (_, kind))| match kind {
            ColumnKind::Numeric => ColumnRule::Passthrough,
            ColumnKind::Categorical => {
                let observed: BTreeSet<&str> = raw
                    .records
                    .iter()
                    .filter_map(|r| match &r.values[i] {
                        Field::Cat(v) => Some(v.as_str()),
                        Field::Num(_) => None,
                    })
                    .collect();
                ColumnRule::OneHot(observed.into_iter().map(str::to_owned).collect())
            }
        })
        .collect();
    EncodingSpec {
        rules,
        labels,
        mode: CategoryMode::Strict,
    }
}

/// Turns raw records into a numeric matrix following `spec`.
pub fn encode(raw: &RawDataset, spec: &EncodingSpec) -> Result<LabeledDataset, IngestError> {
    spec.validate()?;
    if spec.rules.len() != raw.columns.len() {
        return Err(IngestError::DimensionMismatch {
            expected: raw.columns.len(),
            found: spec.rules.len(),
        });
    }
    if raw.records.is_empty() {
        return Err(IngestError::EmptyDataset);
    }
    let names = spec.output_names(&raw.columns);
    let width = names.len();
    let mut values = Vec::with_capacity(raw.records.len() * width);
    let mut labels = Vec::with_capacity(raw.records.len());

    for record in &raw.records {
        if record.values.len() != spec.rules.len() {
            return Err(IngestError::DimensionMismatch {
                expected: spec.rules.len(),
                found: record.values.len(),
            });
        }
        for ((rule, field), (column, _)) in spec.rules.iter().zip(&record.values).zip(&raw.columns)
        {
            match (rule, field) {
                (ColumnRule::Passthrough, Field::Num(v)) => values.push(*v),
                (ColumnRule::Passthrough, Field::Cat(v)) => {
                    let parsed = super::parse_number(v).ok_or_else(|| {
                        IngestError::InvalidEncoding(format!(
                            "column {column:?} is passthrough but holds text {v:?}"
                        ))
                    })?;
                    values.push(parsed);
                }
                (ColumnRule::OneHot(categories), field) => {
                    let text = match field {
                        Field::Cat(v) => v.clone(),
                        Field::Num(v) => v.to_string(),
                    };
                    let hit = categories.iter().position(|c| *c == text);
                    if hit.is_none() && spec.mode == CategoryMode::Strict {
                        return Err(IngestError::UnknownCategory {
                            column: column.clone(),
                            value: text,
                        });
                    }
                    values.extend((0..categories.len()).map(|k| {
                        if Some(k) == hit {
                            1.0
                        } else {
                            0.0
                        }
                    }));
                }
            }
        }
        labels.push(spec.labels.map(&record.label_text));
    }

    let matrix = Array2::from_shape_vec((labels.len(), width), values)
        .map_err(|e| IngestError::InvalidDataset(e.to_string()))?;
    LabeledDataset::new(matrix, labels, names, raw.source)
}
