use ndarray::{Array2, ArrayView2};
use rand::seq::index;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_finite, invalid, DetectError, DetectorVerdict};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IForestConfig {
    pub n_trees: usize,
    /// Rows drawn without replacement for each tree.
    pub subsample: usize,
    /// Points with score above this are anomalies.
    pub threshold: f64,
    pub seed: u64,
}

impl Default for IForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            subsample: 256,
            threshold: 0.6,
            seed: 0,
        }
    }
}

impl IForestConfig {
    pub fn validate(&self) -> Result<(), DetectError> {
        if self.n_trees == 0 {
            return Err(invalid("iforest", "n_trees must be at least 1"));
        }
        if self.subsample < 2 {
            return Err(invalid("iforest", "subsample must be at least 2"));
        }
        if !(self.threshold.is_finite() && self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(invalid(
                "iforest",
                format!("threshold must lie in (0, 1], got {}", self.threshold),
            ));
        }
        Ok(())
    }
}

/// Expected path length of an unsuccessful search in a binary search tree
/// of `n` nodes: `2 H(n-1) - 2 (n-1) / n`.
pub fn average_path_length(n: usize) -> f64 {
    match n {
        0 | 1 => 0.0,
        2 => 1.0,
        _ => {
            let n = n as f64;
            2.0 * ((n - 1.0).ln() + EULER_GAMMA) - 2.0 * (n - 1.0) / n
        }
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        size: usize,
    },
    Split {
        feature: usize,
        value: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

fn grow(
    points: &Array2<f64>,
    rows: &mut [usize],
    depth: usize,
    limit: usize,
    rng: &mut ChaCha8Rng,
) -> Node {
    if depth >= limit || rows.len() <= 1 {
        return Node::Leaf { size: rows.len() };
    }
    // Only features that still vary can split the node.
    let ranges: Vec<(usize, f64, f64)> = (0..points.ncols())
        .filter_map(|f| {
            let (lo, hi) = rows
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| {
                    let v = points[[r, f]];
                    (lo.min(v), hi.max(v))
                });
            (hi > lo).then_some((f, lo, hi))
        })
        .collect();
    if ranges.is_empty() {
        return Node::Leaf { size: rows.len() };
    }
    let (feature, lo, hi) = ranges[rng.random_range(0..ranges.len())];
    let value = rng.random_range(lo..hi);
    let mut split = 0;
    for k in 0..rows.len() {
        if points[[rows[k], feature]] < value {
            rows.swap(k, split);
            split += 1;
        }
    }
    let (left, right) = rows.split_at_mut(split);
    Node::Split {
        feature,
        value,
        left: Box::new(grow(points, left, depth + 1, limit, rng)),
        right: Box::new(grow(points, right, depth + 1, limit, rng)),
    }
}

fn path_length(node: &Node, x: &[f64]) -> f64 {
    let mut node = node;
    let mut depth = 0.0;
    loop {
        match node {
            Node::Leaf { size } => return depth + average_path_length(*size),
            Node::Split {
                feature,
                value,
                left,
                right,
            } => {
                node = if x[*feature] < *value { left } else { right };
                depth += 1.0;
            }
        }
    }
}

/// A fitted ensemble of isolation trees.
#[derive(Debug, Clone)]
pub struct IsolationForest {
    trees: Vec<Node>,
    sample_size: usize,
}

impl IsolationForest {
    pub fn fit(points: ArrayView2<'_, f64>, config: &IForestConfig) -> Result<Self, DetectError> {
        config.validate()?;
        let m = points.nrows();
        if m < 2 {
            return Err(DetectError::TooFewPoints { needed: 2, got: m });
        }
        check_finite(points)?;
        let points = points.as_standard_layout().into_owned();
        let sample_size = config.subsample.min(m);
        let limit = (sample_size as f64).log2().ceil() as usize;

        let mut master = ChaCha8Rng::seed_from_u64(config.seed);
        let tree_seeds: Vec<u64> = (0..config.n_trees).map(|_| master.next_u64()).collect();
        let trees = tree_seeds
            .par_iter()
            .map(|&seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut rows = index::sample(&mut rng, m, sample_size).into_vec();
                grow(&points, &mut rows, 0, limit, &mut rng)
            })
            .collect();
        Ok(Self { trees, sample_size })
    }

    /// `2^(-E[h(x)] / c(ψ))`, in (0, 1).
    pub fn score(&self, x: &[f64]) -> f64 {
        let mean_path =
            self.trees.iter().map(|t| path_length(t, x)).sum::<f64>() / self.trees.len() as f64;
        2f64.powf(-mean_path / average_path_length(self.sample_size))
    }

    pub fn score_all(&self, points: ArrayView2<'_, f64>) -> Vec<f64> {
        let points = points.as_standard_layout().into_owned();
        (0..points.nrows())
            .into_par_iter()
            .map(|i| self.score(points.row(i).to_slice().expect("standard layout")))
            .collect()
    }
}

pub fn iforest_detect(
    points: ArrayView2<'_, f64>,
    config: &IForestConfig,
) -> Result<DetectorVerdict, DetectError> {
    let forest = IsolationForest::fit(points, config)?;
    let score = forest.score_all(points);
    let is_anomaly = score.iter().map(|&s| s > config.threshold).collect();
    Ok(DetectorVerdict {
        method_name: "iforest".into(),
        params_echo: serde_json::to_value(config).expect("config serializes"),
        score,
        is_anomaly,
        threshold: config.threshold,
        cluster_label: None,
    })
}
