//! Principal component analysis by eigendecomposition of the population
//! covariance matrix.
//!
//! The retained dimension is the smallest `d` whose cumulative explained
//! variance strictly exceeds the target, capped by `max_components` and by
//! the rank bound `min(m, p)`.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_VARIANCE_TARGET: f64 = 0.95;
pub const DEFAULT_MAX_COMPONENTS: usize = 50;
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum PcaError {
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("matrix has no columns")]
    NoFeatures,
    #[error("non-finite value at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },
    #[error("expected {expected} columns, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid PCA config: {0}")]
    InvalidConfig(String),
    #[error("unsupported model schema version {0}")]
    SchemaVersion(u32),
    #[error("model document: {0}")]
    Json(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PcaConfig {
    pub variance_target: f64,
    pub max_components: usize,
}

impl Default for PcaConfig {
    fn default() -> Self {
        Self {
            variance_target: DEFAULT_VARIANCE_TARGET,
            max_components: DEFAULT_MAX_COMPONENTS,
        }
    }
}

impl PcaConfig {
    pub fn validate(&self) -> Result<(), PcaError> {
        if !(self.variance_target > 0.0 && self.variance_target <= 1.0) {
            return Err(PcaError::InvalidConfig(format!(
                "variance_target must lie in (0, 1], got {}",
                self.variance_target
            )));
        }
        if self.max_components == 0 {
            return Err(PcaError::InvalidConfig(
                "max_components must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// A fitted projection onto the leading `d` eigenvectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Array1<f64>,
    /// `p × d`, one orthonormal eigenvector per column.
    pub components: Array2<f64>,
    /// Retained eigenvalues, nonincreasing.
    pub eigenvalues: Vec<f64>,
    /// All `p` eigenvalues, nonincreasing, negatives clamped to 0.
    pub spectrum: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
    /// Trace of the covariance matrix.
    pub total_variance: f64,
    /// Set when the data had zero total variance; `d` is then forced to 1.
    pub degenerate: bool,
}

#[derive(Serialize, Deserialize)]
struct PcaDocument {
    schema_version: u32,
    #[serde(flatten)]
    model: PcaModel,
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.components.ncols()
    }

    pub fn n_features(&self) -> usize {
        self.components.nrows()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&PcaDocument {
            schema_version: SCHEMA_VERSION,
            model: self.clone(),
        })
        .expect("PCA model is always serializable")
    }

    pub fn from_json(text: &str) -> Result<Self, PcaError> {
        let doc: PcaDocument =
            serde_json::from_str(text).map_err(|e| PcaError::Json(e.to_string()))?;
        if doc.schema_version != SCHEMA_VERSION {
            return Err(PcaError::SchemaVersion(doc.schema_version));
        }
        Ok(doc.model)
    }
}

fn check_finite(matrix: &Array2<f64>) -> Result<(), PcaError> {
    match matrix.indexed_iter().find(|(_, v)| !v.is_finite()) {
        Some(((row, column), _)) => Err(PcaError::NonFinite { row, column }),
        None => Ok(()),
    }
}

/// `(1/m) * sum_i (x_i - mean)(x_i - mean)^T` together with the mean.
pub fn covariance(matrix: &Array2<f64>) -> (Array1<f64>, Array2<f64>) {
    let m = matrix.nrows() as f64;
    let mean = matrix.mean_axis(Axis(0)).expect("at least one row");
    let centered = matrix - &mean;
    let cov = centered.t().dot(&centered) / m;
    (mean, cov)
}

pub fn fit_pca(matrix: &Array2<f64>, config: &PcaConfig) -> Result<PcaModel, PcaError> {
    config.validate()?;
    let (m, p) = matrix.dim();
    if m < 2 {
        return Err(PcaError::TooFewSamples(m));
    }
    if p == 0 {
        return Err(PcaError::NoFeatures);
    }
    check_finite(matrix)?;

    let (mean, cov) = covariance(matrix);
    let total_variance: f64 = cov.diag().sum();

    let eigen = SymmetricEigen::new(DMatrix::from_fn(p, p, |i, j| cov[[i, j]]));
    let mut order: Vec<usize> = (0..p).collect();
    // Stable: equal eigenvalues keep the solver's index order.
    order.sort_by(|&a, &b| eigen.eigenvalues[b].total_cmp(&eigen.eigenvalues[a]));
    let spectrum: Vec<f64> = order
        .iter()
        .map(|&k| eigen.eigenvalues[k].max(0.0))
        .collect();

    let degenerate = total_variance <= 0.0;
    let d = if degenerate {
        1
    } else {
        let mut cumulative = 0.0;
        let needed = spectrum
            .iter()
            .position(|&lambda| {
                cumulative += lambda / total_variance;
                cumulative > config.variance_target
            })
            .map_or(p, |i| i + 1);
        needed.min(config.max_components).min(m.min(p)).max(1)
    };
    if degenerate {
        log::warn!("data has zero total variance; keeping a single component");
    }

    let mut components = Array2::zeros((p, d));
    for (c, &k) in order.iter().take(d).enumerate() {
        let vector = eigen.eigenvectors.column(k);
        // Sign convention: largest-magnitude entry (first on ties) is nonnegative.
        let pivot = (0..p).fold(0, |best, i| {
            if vector[i].abs() > vector[best].abs() {
                i
            } else {
                best
            }
        });
        let sign = if vector[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..p {
            components[[i, c]] = sign * vector[i];
        }
    }

    let eigenvalues = spectrum[..d].to_vec();
    let explained_variance_ratio = if degenerate {
        vec![1.0]
    } else {
        eigenvalues.iter().map(|l| l / total_variance).collect()
    };

    Ok(PcaModel {
        mean,
        components,
        eigenvalues,
        spectrum,
        explained_variance_ratio,
        total_variance,
        degenerate,
    })
}

/// Maps each row to `V^T (x - mean)`.
pub fn project(model: &PcaModel, matrix: &Array2<f64>) -> Result<Array2<f64>, PcaError> {
    if matrix.ncols() != model.n_features() {
        return Err(PcaError::DimensionMismatch {
            expected: model.n_features(),
            found: matrix.ncols(),
        });
    }
    Ok((matrix - &model.mean).dot(&model.components))
}

pub fn explained_variance(model: &PcaModel) -> &[f64] {
    &model.explained_variance_ratio
}
