use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use super::{IngestError, LabeledDataset};

/// Per-column `[min, max]` fitted on a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(matrix: &Array2<f64>) -> Result<Self, IngestError> {
        if matrix.nrows() == 0 {
            return Err(IngestError::EmptyDataset);
        }
        let fold = |init: f64, pick: fn(f64, f64) -> f64| {
            matrix
                .axis_iter(Axis(1))
                .map(|col| col.iter().copied().fold(init, pick))
                .collect::<Vec<_>>()
        };
        Ok(Self {
            min: fold(f64::INFINITY, f64::min),
            max: fold(f64::NEG_INFINITY, f64::max),
        })
    }

    /// `(v - min) / (max - min)` per column. Values outside the fitted range
    /// are not clamped; constant columns map to 0.
    pub fn transform(&self, matrix: &Array2<f64>) -> Result<Array2<f64>, IngestError> {
        if matrix.ncols() != self.min.len() {
            return Err(IngestError::DimensionMismatch {
                expected: self.min.len(),
                found: matrix.ncols(),
            });
        }
        let mut out = matrix.clone();
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            let (lo, hi) = (self.min[j], self.max[j]);
            let range = hi - lo;
            if range > 0.0 {
                col.mapv_inplace(|v| (v - lo) / range);
            } else {
                col.fill(0.0);
            }
        }
        Ok(out)
    }
}

pub fn fit_minmax(dataset: &LabeledDataset) -> Result<MinMaxScaler, IngestError> {
    MinMaxScaler::fit(&dataset.matrix)
}

pub fn apply_minmax(
    scaler: &MinMaxScaler,
    dataset: &LabeledDataset,
) -> Result<LabeledDataset, IngestError> {
    let matrix = scaler.transform(&dataset.matrix)?;
    LabeledDataset::new(
        matrix,
        dataset.labels.clone(),
        dataset.feature_names.clone(),
        dataset.source,
    )
}
