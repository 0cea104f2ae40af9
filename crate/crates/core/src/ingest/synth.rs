use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use super::{IngestError, Label, LabeledDataset, Source};

/// Gaussian blobs of normal traffic plus a small uniform cloud of outliers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub n_normal: usize,
    pub n_anomaly: usize,
    pub dims: usize,
    pub n_clusters: usize,
    pub cluster_spread: f64,
    pub outlier_low: f64,
    pub outlier_high: f64,
    pub seed: u64,
}

impl SynthConfig {
    /// The fixed imbalanced reference set: 2000 points in 10 dimensions,
    /// 99% in three blobs and 1% uniform outliers.
    pub fn reference() -> Self {
        Self {
            n_normal: 1980,
            n_anomaly: 20,
            dims: 10,
            n_clusters: 3,
            cluster_spread: 0.02,
            outlier_low: -0.5,
            outlier_high: 1.5,
            seed: 20_241_018,
        }
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        let fail = |msg: &str| Err(IngestError::InvalidConfig(msg.to_string()));
        if self.n_normal == 0 {
            return fail("n_normal must be at least 1");
        }
        if self.n_anomaly > self.n_normal {
            return fail("n_anomaly must not exceed n_normal");
        }
        if self.dims == 0 {
            return fail("dims must be at least 1");
        }
        if self.n_clusters == 0 {
            return fail("n_clusters must be at least 1");
        }
        if !(self.cluster_spread.is_finite() && self.cluster_spread > 0.0) {
            return fail("cluster_spread must be finite and positive");
        }
        if !(self.outlier_low.is_finite()
            && self.outlier_high.is_finite()
            && self.outlier_low < self.outlier_high)
        {
            return fail("outlier range must be finite with outlier_low < outlier_high");
        }
        Ok(())
    }
}

/// Draws the dataset described by `config`. Rows are shuffled so anomalies
/// are spread through the stream; the output depends only on `config`.
pub fn generate_synthetic(config: &SynthConfig) -> Result<LabeledDataset, IngestError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let dims = config.dims;

    let centers: Vec<Vec<f64>> = (0..config.n_clusters)
        .map(|_| (0..dims).map(|_| rng.random::<f64>()).collect())
        .collect();
    let noise = Normal::new(0.0, config.cluster_spread)
        .map_err(|e| IngestError::InvalidConfig(e.to_string()))?;
    let outlier = Uniform::new(config.outlier_low, config.outlier_high)
        .map_err(|e| IngestError::InvalidConfig(e.to_string()))?;

    let mut rows: Vec<(Vec<f64>, Label)> = Vec::with_capacity(config.n_normal + config.n_anomaly);
    for _ in 0..config.n_normal {
        let center = &centers[rng.random_range(0..config.n_clusters)];
        let point = center.iter().map(|c| c + noise.sample(&mut rng)).collect();
        rows.push((point, Label::Normal));
    }
    for _ in 0..config.n_anomaly {
        let point = (0..dims).map(|_| outlier.sample(&mut rng)).collect();
        rows.push((point, Label::Anomaly));
    }
    rows.shuffle(&mut rng);

    let m = rows.len();
    let mut values = Vec::with_capacity(m * dims);
    let mut labels = Vec::with_capacity(m);
    for (point, label) in rows {
        values.extend(point);
        labels.push(label);
    }
    let matrix = Array2::from_shape_vec((m, dims), values)
        .map_err(|e| IngestError::InvalidDataset(e.to_string()))?;
    let names = (0..dims).map(|j| format!("x{j}")).collect();
    LabeledDataset::new(matrix, labels, names, Source::Synthetic)
}
