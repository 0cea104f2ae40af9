//! Glue from a labeled dataset to the matrix the detectors see:
//! optional window features, min-max scaling to `[0, 1]`, then PCA.

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{DetectError, DetectorConfig, DetectorVerdict};
use crate::features::{self, FeatureError, WindowConfig};
use crate::ingest::{IngestError, Label, LabeledDataset, MinMaxScaler};
use crate::pca::{self, PcaConfig, PcaError, PcaModel};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error(transparent)]
    Pca(#[from] PcaError),
    #[error(transparent)]
    Detect(#[from] DetectError),
}

/// How rows become detector inputs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FeatureMode {
    /// Each record is one point (tabular connection records).
    #[default]
    Record,
    /// Each window of the stream is one point described by its moments and
    /// spectral features. A window is labeled anomalous when any of its rows is.
    Window { window: WindowConfig, top_k: usize },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub features: FeatureMode,
    pub pca: PcaConfig,
}

#[derive(Debug, Clone)]
pub struct Prepared {
    /// Rows after scaling and projection.
    pub points: Array2<f64>,
    pub labels: Vec<Label>,
    /// Row offset in the input stream of each point.
    pub origins: Vec<usize>,
    pub feature_names: Vec<String>,
    pub scaler: MinMaxScaler,
    pub pca: PcaModel,
}

/// Window labels: anomalous if any row in the window is.
fn window_labels(labels: &[Label], starts: &[usize], len: usize) -> Vec<Label> {
    starts
        .iter()
        .map(|&s| {
            if labels[s..s + len].iter().any(|l| l.is_anomaly()) {
                Label::Anomaly
            } else {
                Label::Normal
            }
        })
        .collect()
}

pub fn prepare(
    dataset: &LabeledDataset,
    config: &PreprocessConfig,
) -> Result<Prepared, PipelineError> {
    let (matrix, labels, origins, feature_names) = match config.features {
        FeatureMode::Record => (
            dataset.matrix.clone(),
            dataset.labels.clone(),
            (0..dataset.n_samples()).collect(),
            dataset.feature_names.clone(),
        ),
        FeatureMode::Window { window, top_k } => {
            let windows = features::segment_windows(&dataset.matrix, &window)?;
            let assembled = features::assemble_features(&windows, top_k)?;
            let starts: Vec<usize> = windows.iter().map(|w| w.start_index).collect();
            let labels = window_labels(&dataset.labels, &starts, window.window_len);
            let names = features::feature_layout(&dataset.feature_names, top_k);
            (assembled.values, labels, starts, names)
        }
    };
    let scaler = MinMaxScaler::fit(&matrix)?;
    let scaled = scaler.transform(&matrix)?;
    let model = pca::fit_pca(&scaled, &config.pca)?;
    let points = pca::project(&model, &scaled)?;
    Ok(Prepared {
        points,
        labels,
        origins,
        feature_names,
        scaler,
        pca: model,
    })
}

/// Prepares the dataset and runs one detector on it.
pub fn run(
    dataset: &LabeledDataset,
    preprocess: &PreprocessConfig,
    detector: &DetectorConfig,
) -> Result<(Prepared, DetectorVerdict), PipelineError> {
    let prepared = prepare(dataset, preprocess)?;
    let verdict = detector.run(prepared.points.view())?;
    Ok((prepared, verdict))
}
