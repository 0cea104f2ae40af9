use std::collections::VecDeque;

use ndarray::ArrayView2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{invalid, DetectError, DetectorVerdict};
use crate::dpc::{Distances, PointDistances};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DbscanConfig {
    pub eps: f64,
    /// Neighbours (self excluded) needed for a core point.
    pub min_pts: usize,
}

impl Default for DbscanConfig {
    fn default() -> Self {
        Self {
            eps: 0.15,
            min_pts: 8,
        }
    }
}

impl DbscanConfig {
    pub fn validate(&self) -> Result<(), DetectError> {
        if !(self.eps.is_finite() && self.eps > 0.0) {
            return Err(invalid(
                "dbscan",
                format!("eps must be finite and positive, got {}", self.eps),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DbscanModel {
    pub is_core: Vec<bool>,
    /// Cluster id per point, -1 for noise.
    pub labels: Vec<i64>,
}

impl DbscanModel {
    pub fn fit(points: ArrayView2<'_, f64>, config: &DbscanConfig) -> Result<Self, DetectError> {
        config.validate()?;
        let dist = PointDistances::new(points)?;
        let m = dist.len();
        let eps = config.eps;
        let dist = &dist;
        let neighbours = |i: usize| (0..m).filter(move |&j| j != i && dist.distance(i, j) <= eps);

        let is_core: Vec<bool> = (0..m)
            .into_par_iter()
            .map(|i| neighbours(i).count() >= config.min_pts)
            .collect();

        let mut labels = vec![-1i64; m];
        let mut next_id = 0;
        for seed in 0..m {
            if !is_core[seed] || labels[seed] >= 0 {
                continue;
            }
            labels[seed] = next_id;
            let mut queue = VecDeque::from([seed]);
            while let Some(p) = queue.pop_front() {
                for q in neighbours(p) {
                    if labels[q] < 0 {
                        labels[q] = next_id;
                        if is_core[q] {
                            queue.push_back(q);
                        }
                    }
                }
            }
            next_id += 1;
        }
        Ok(Self { is_core, labels })
    }
}

/// Noise points (neither core nor within `eps` of a core) are anomalies.
pub fn dbscan_detect(
    points: ArrayView2<'_, f64>,
    config: &DbscanConfig,
) -> Result<DetectorVerdict, DetectError> {
    let model = DbscanModel::fit(points, config)?;
    let is_anomaly: Vec<bool> = model.labels.iter().map(|&l| l < 0).collect();
    Ok(DetectorVerdict {
        method_name: "dbscan".into(),
        params_echo: serde_json::to_value(config).expect("config serializes"),
        score: is_anomaly
            .iter()
            .map(|&a| if a { 1.0 } else { 0.0 })
            .collect(),
        is_anomaly,
        threshold: 0.5,
        cluster_label: Some(model.labels),
    })
}
