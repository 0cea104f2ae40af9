use std::collections::HashSet;
use std::io;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::metrics::{confusion, MetricsReport};
use crate::baselines::{DbscanConfig, DetectorConfig, IForestConfig, KMeansConfig};
use crate::dpc::DpcParams;
use crate::ingest::{generate_synthetic, LabeledDataset, SynthConfig};
use crate::pipeline::{self, PreprocessConfig};
use crate::rng;

pub const DEFAULT_VOLUMES: [usize; 4] = [1000, 2000, 5000, 10_000];

/// Where each volume's rows come from.
#[derive(Debug, Clone)]
pub enum SweepSource {
    /// A fresh synthetic draw per volume with `round(volume · anomaly_fraction)`
    /// anomalies; the counts in `base` are replaced.
    Synthetic {
        base: SynthConfig,
        anomaly_fraction: f64,
    },
    /// The first `volume` rows of a loaded dataset.
    Dataset {
        name: String,
        data: Arc<LabeledDataset>,
    },
}

impl SweepSource {
    fn describe(&self) -> Value {
        match self {
            SweepSource::Synthetic {
                base,
                anomaly_fraction,
            } => json!({
                "kind": "synthetic",
                "base": base,
                "anomaly_fraction": anomaly_fraction,
            }),
            SweepSource::Dataset { name, data } => json!({
                "kind": "dataset",
                "name": name,
                "rows": data.n_samples(),
                "features": data.n_features(),
            }),
        }
    }

    fn draw(&self, volume: usize) -> Result<LabeledDataset, String> {
        match self {
            SweepSource::Synthetic {
                base,
                anomaly_fraction,
            } => {
                let n_anomaly = (volume as f64 * anomaly_fraction).round() as usize;
                let config = SynthConfig {
                    n_normal: volume.saturating_sub(n_anomaly),
                    n_anomaly,
                    ..base.clone()
                };
                generate_synthetic(&config).map_err(|e| e.to_string())
            }
            SweepSource::Dataset { data, .. } => data.head(volume).ok_or_else(|| {
                format!(
                    "dataset has {} rows, fewer than volume {volume}",
                    data.n_samples()
                )
            }),
        }
    }
}

/// One named configuration of one detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSpec {
    pub setting: String,
    pub detector: DetectorConfig,
}

impl MethodSpec {
    pub fn new(setting: &str, detector: DetectorConfig) -> Self {
        Self {
            setting: setting.into(),
            detector,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub volumes: Vec<usize>,
    pub methods: Vec<MethodSpec>,
    pub preprocess: PreprocessConfig,
    pub source: SweepSource,
    pub seed: u64,
}

/// The three density peaks settings compared across volumes. Setting 1 is
/// d_c 0.15, ρ 8, δ 0.18, A_th 1.4; the other two bracket it.
pub fn default_dpc_settings() -> Vec<(String, DpcParams)> {
    let base = DpcParams::default();
    vec![
        ("setting1".into(), base),
        (
            "setting2".into(),
            DpcParams {
                d_c: 0.10,
                rho_min: 5.0,
                delta_min: 0.12,
                a_th: 1.2,
                ..base
            },
        ),
        (
            "setting3".into(),
            DpcParams {
                d_c: 0.20,
                rho_min: 10.0,
                delta_min: 0.25,
                a_th: 1.6,
                ..base
            },
        ),
    ]
}

/// Every method with its default configuration, seeds derived from `seed`.
pub fn default_methods(seed: u64) -> Vec<MethodSpec> {
    let mut methods: Vec<MethodSpec> = default_dpc_settings()
        .into_iter()
        .map(|(name, params)| MethodSpec::new(&name, DetectorConfig::Dpc(params)))
        .collect();
    methods.push(MethodSpec::new(
        "default",
        DetectorConfig::Kmeans(KMeansConfig {
            seed: rng::derive_seed(seed, rng::KMEANS),
            ..KMeansConfig::default()
        }),
    ));
    methods.push(MethodSpec::new(
        "default",
        DetectorConfig::Iforest(IForestConfig {
            seed: rng::derive_seed(seed, rng::IFOREST),
            ..IForestConfig::default()
        }),
    ));
    methods.push(MethodSpec::new(
        "default",
        DetectorConfig::Dbscan(DbscanConfig::default()),
    ));
    methods
}

impl SweepSpec {
    /// Default volumes and methods over the reference synthetic mixture.
    pub fn default_grid(seed: u64) -> Self {
        let base = SynthConfig {
            seed: rng::derive_seed(seed, rng::DATASET),
            ..SynthConfig::reference()
        };
        Self {
            volumes: DEFAULT_VOLUMES.to_vec(),
            methods: default_methods(seed),
            preprocess: PreprocessConfig::default(),
            source: SweepSource::Synthetic {
                base,
                anomaly_fraction: 0.01,
            },
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.volumes.is_empty() {
            return Err("at least one volume is required".into());
        }
        if self.volumes.contains(&0) {
            return Err("volumes must be positive".into());
        }
        let mut seen = HashSet::new();
        for v in &self.volumes {
            if !seen.insert(*v) {
                return Err(format!("volume {v} listed twice"));
            }
        }
        let mut seen = HashSet::new();
        for m in &self.methods {
            if !seen.insert((m.detector.method_name(), m.setting.as_str())) {
                return Err(format!(
                    "setting {:?} listed twice for {}",
                    m.setting,
                    m.detector.method_name()
                ));
            }
            m.detector.validate().map_err(|e| e.to_string())?;
        }
        if let SweepSource::Synthetic {
            anomaly_fraction, ..
        } = &self.source
        {
            if !(0.0..=0.5).contains(anomaly_fraction) {
                return Err("anomaly_fraction must lie in [0, 0.5]".into());
            }
        }
        Ok(())
    }

    pub fn describe(&self) -> Value {
        json!({
            "volumes": self.volumes,
            "methods": self.methods,
            "preprocess": self.preprocess,
            "source": self.source.describe(),
            "seed": self.seed,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CellOutcome {
    Ok(MetricsReport),
    Failed { error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub method: String,
    pub setting: String,
    pub volume: usize,
    pub seed: u64,
    pub outcome: CellOutcome,
}

impl SweepCell {
    pub fn report(&self) -> Option<&MetricsReport> {
        match &self.outcome {
            CellOutcome::Ok(r) => Some(r),
            CellOutcome::Failed { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    /// Sorted by method, setting, then volume.
    pub cells: Vec<SweepCell>,
    pub settings: Vec<MethodSpec>,
}

pub const CSV_COLUMNS: [&str; 11] = [
    "method", "setting", "volume", "tp", "tn", "fp", "fn", "accuracy", "g_mean", "fpr", "seed",
];

impl SweepReport {
    pub fn cell(&self, method: &str, setting: &str, volume: usize) -> Option<&SweepCell> {
        self.cells
            .iter()
            .find(|c| c.method == method && c.setting == setting && c.volume == volume)
    }

    /// Combined table; metrics of failed cells are left empty.
    pub fn write_csv<W: io::Write>(&self, writer: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(CSV_COLUMNS)?;
        for cell in &self.cells {
            let mut row = vec![
                cell.method.clone(),
                cell.setting.clone(),
                cell.volume.to_string(),
            ];
            match cell.report() {
                Some(r) => row.extend([
                    r.confusion.tp.to_string(),
                    r.confusion.tn.to_string(),
                    r.confusion.fp.to_string(),
                    r.confusion.fn_.to_string(),
                    r.accuracy.to_string(),
                    r.g_mean.to_string(),
                    r.fpr.to_string(),
                ]),
                None => row.extend(std::iter::repeat_n(String::new(), 7)),
            }
            row.push(cell.seed.to_string());
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }

    /// One metric per row: `method,setting,volume,<metric>,seed`, where
    /// `metric` is `accuracy`, `g_mean` or `fpr`.
    pub fn write_metric_csv<W: io::Write>(&self, writer: W, metric: &str) -> csv::Result<()> {
        let pick = |r: &MetricsReport| match metric {
            "accuracy" => r.accuracy,
            "g_mean" => r.g_mean,
            "fpr" => r.fpr,
            other => panic!("unknown metric {other:?}"),
        };
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["method", "setting", "volume", metric, "seed"])?;
        for cell in &self.cells {
            let value = cell
                .report()
                .map(|r| pick(r).to_string())
                .unwrap_or_default();
            out.write_record([
                cell.method.clone(),
                cell.setting.clone(),
                cell.volume.to_string(),
                value,
                cell.seed.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_json(&self, spec: &SweepSpec) -> Value {
        json!({ "spec": spec.describe(), "cells": self.cells })
    }
}

fn run_volume(spec: &SweepSpec, volume: usize) -> Vec<SweepCell> {
    let cell = |m: &MethodSpec, outcome: CellOutcome| SweepCell {
        method: m.detector.method_name().into(),
        setting: m.setting.clone(),
        volume,
        seed: spec.seed,
        outcome,
    };
    let prepared = spec
        .source
        .draw(volume)
        .and_then(|data| pipeline::prepare(&data, &spec.preprocess).map_err(|e| e.to_string()));
    let prepared = match prepared {
        Ok(p) => p,
        Err(error) => {
            log::warn!("volume {volume}: {error}");
            return spec
                .methods
                .iter()
                .map(|m| {
                    cell(
                        m,
                        CellOutcome::Failed {
                            error: error.clone(),
                        },
                    )
                })
                .collect();
        }
    };
    spec.methods
        .par_iter()
        .map(|m| {
            let outcome = m
                .detector
                .run(prepared.points.view())
                .map_err(|e| e.to_string())
                .and_then(|verdict| {
                    let cm = confusion(&verdict.is_anomaly, &prepared.labels)
                        .map_err(|e| e.to_string())?;
                    MetricsReport::new(
                        m.detector.method_name(),
                        &m.setting,
                        volume,
                        spec.seed,
                        cm,
                        verdict.params_echo,
                    )
                    .map_err(|e| e.to_string())
                });
            match outcome {
                Ok(report) => cell(m, CellOutcome::Ok(report)),
                Err(error) => {
                    log::warn!(
                        "{} {} at {volume}: {error}",
                        m.detector.method_name(),
                        m.setting
                    );
                    cell(m, CellOutcome::Failed { error })
                }
            }
        })
        .collect()
}

/// Runs every (method, setting) at every volume. Cells are independent and
/// run in parallel; the report order does not depend on scheduling.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepReport, String> {
    spec.validate()?;
    let mut cells: Vec<SweepCell> = spec
        .volumes
        .par_iter()
        .flat_map_iter(|&v| run_volume(spec, v))
        .collect();
    cells.sort_by(|a, b| {
        (a.method.as_str(), a.setting.as_str(), a.volume).cmp(&(
            b.method.as_str(),
            b.setting.as_str(),
            b.volume,
        ))
    });
    Ok(SweepReport {
        cells,
        settings: spec.methods.clone(),
    })
}
