//! Comparison detectors sharing one verdict shape with density peaks
//! clustering: k-means distance thresholding, isolation forest and DBSCAN
//! noise detection.

mod dbscan;
mod iforest;
mod kmeans;

use std::io;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::dpc::{self, DpcError, DpcParams};

pub use dbscan::{dbscan_detect, DbscanConfig, DbscanModel};
pub use iforest::{average_path_length, iforest_detect, IForestConfig, IsolationForest};
pub use kmeans::{kmeans_detect, kmeans_fit, nearest_rank_quantile, KMeansConfig, KMeansModel};

#[derive(Debug, Error, PartialEq)]
pub enum DetectError {
    #[error(transparent)]
    Dpc(#[from] DpcError),
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("invalid {method} config: {reason}")]
    InvalidConfig {
        method: &'static str,
        reason: String,
    },
}

/// Per-point outcome of one detector run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorVerdict {
    pub method_name: String,
    pub params_echo: Value,
    /// Higher is more anomalous; may be infinite.
    pub score: Vec<f64>,
    pub is_anomaly: Vec<bool>,
    /// `is_anomaly[i] == (score[i] > threshold)`.
    pub threshold: f64,
    pub cluster_label: Option<Vec<i64>>,
}

impl DetectorVerdict {
    pub fn len(&self) -> usize {
        self.is_anomaly.len()
    }

    pub fn is_empty(&self) -> bool {
        self.is_anomaly.is_empty()
    }

    pub fn anomaly_count(&self) -> usize {
        self.is_anomaly.iter().filter(|&&a| a).count()
    }

    /// Whether thresholding the scores reproduces the verdicts.
    pub fn is_consistent(&self) -> bool {
        self.score
            .iter()
            .zip(&self.is_anomaly)
            .all(|(&s, &a)| (s > self.threshold) == a)
    }

    pub fn to_json(&self) -> Value {
        let points: Vec<Value> = (0..self.len())
            .map(|i| {
                let score = if self.score[i].is_infinite() {
                    json!("inf")
                } else {
                    json!(self.score[i])
                };
                json!({
                    "index": i,
                    "score": score,
                    "label": self.cluster_label.as_ref().map_or(-1, |l| l[i]),
                    "is_anomaly": self.is_anomaly[i],
                })
            })
            .collect();
        json!({
            "method": self.method_name,
            "params": self.params_echo,
            "threshold": self.threshold,
            "points": points,
        })
    }

    /// `index,score,label,is_anomaly`.
    pub fn write_csv<W: io::Write>(&self, writer: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["index", "score", "label", "is_anomaly"])?;
        for i in 0..self.len() {
            let score = if self.score[i].is_infinite() {
                "inf".to_string()
            } else {
                self.score[i].to_string()
            };
            let label = self.cluster_label.as_ref().map_or(-1, |l| l[i]);
            out.write_record([
                i.to_string(),
                score,
                label.to_string(),
                self.is_anomaly[i].to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Any of the four detectors with its configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum DetectorConfig {
    Dpc(DpcParams),
    Kmeans(KMeansConfig),
    Iforest(IForestConfig),
    Dbscan(DbscanConfig),
}

impl DetectorConfig {
    pub fn method_name(&self) -> &'static str {
        match self {
            DetectorConfig::Dpc(_) => "dpc",
            DetectorConfig::Kmeans(_) => "kmeans",
            DetectorConfig::Iforest(_) => "iforest",
            DetectorConfig::Dbscan(_) => "dbscan",
        }
    }

    pub fn validate(&self) -> Result<(), DetectError> {
        match self {
            DetectorConfig::Dpc(p) => Ok(p.validate()?),
            DetectorConfig::Kmeans(c) => c.validate(),
            DetectorConfig::Iforest(c) => c.validate(),
            DetectorConfig::Dbscan(c) => c.validate(),
        }
    }

    pub fn run(&self, points: ArrayView2<'_, f64>) -> Result<DetectorVerdict, DetectError> {
        match self {
            DetectorConfig::Dpc(p) => dpc_verdict(points, p),
            DetectorConfig::Kmeans(c) => kmeans_detect(points, c),
            DetectorConfig::Iforest(c) => iforest_detect(points, c),
            DetectorConfig::Dbscan(c) => dbscan_detect(points, c),
        }
    }
}

/// Density peaks clustering in batches, flattened into a verdict. Cluster
/// labels are offset to global row indices.
pub fn dpc_verdict(
    points: ArrayView2<'_, f64>,
    params: &DpcParams,
) -> Result<DetectorVerdict, DetectError> {
    let batches = dpc::detect_batched(points, params)?;
    let mut verdict = DetectorVerdict {
        method_name: "dpc".into(),
        params_echo: serde_json::to_value(params).expect("params serialize"),
        score: Vec::with_capacity(points.nrows()),
        is_anomaly: Vec::with_capacity(points.nrows()),
        threshold: params.a_th,
        cluster_label: Some(Vec::with_capacity(points.nrows())),
    };
    let mut offset = 0i64;
    for batch in batches {
        verdict.score.extend(&batch.score);
        verdict.is_anomaly.extend(&batch.is_anomaly);
        if let Some(labels) = verdict.cluster_label.as_mut() {
            labels.extend(
                batch
                    .cluster_label
                    .iter()
                    .map(|&l| if l < 0 { l } else { l + offset }),
            );
        }
        offset += batch.len() as i64;
    }
    Ok(verdict)
}

pub(crate) fn invalid(method: &'static str, reason: impl Into<String>) -> DetectError {
    DetectError::InvalidConfig {
        method,
        reason: reason.into(),
    }
}

pub(crate) fn check_finite(points: ArrayView2<'_, f64>) -> Result<(), DetectError> {
    match points.indexed_iter().find(|(_, v)| !v.is_finite()) {
        Some(((row, column), _)) => Err(DpcError::NonFinite { row, column }.into()),
        None => Ok(()),
    }
}
