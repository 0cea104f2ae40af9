use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_finite, invalid, DetectError, DetectorVerdict};
use crate::dpc::euclidean;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KMeansConfig {
    pub k: usize,
    pub max_iters: usize,
    /// Points scoring above this nearest-rank quantile are anomalies.
    pub quantile: f64,
    pub seed: u64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            k: 3,
            max_iters: 100,
            quantile: 0.95,
            seed: 0,
        }
    }
}

impl KMeansConfig {
    pub fn validate(&self) -> Result<(), DetectError> {
        if self.k == 0 {
            return Err(invalid("kmeans", "k must be at least 1"));
        }
        if !(self.quantile > 0.0 && self.quantile <= 1.0) {
            return Err(invalid(
                "kmeans",
                format!("quantile must lie in (0, 1], got {}", self.quantile),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansModel {
    pub centroids: Array2<f64>,
    pub assignment: Vec<usize>,
    /// Sum of squared distances to the assigned centroid after each
    /// assignment step.
    pub objective_history: Vec<f64>,
}

fn row(points: &Array2<f64>, i: usize) -> &[f64] {
    points.row(i).to_slice().expect("standard layout")
}

fn nearest(points: &Array2<f64>, centroids: &Array2<f64>, i: usize) -> (usize, f64) {
    let x = row(points, i);
    let mut best = (0, f64::INFINITY);
    for c in 0..centroids.nrows() {
        let d = euclidean(x, row(centroids, c));
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Weighted farthest-point seeding: each new centroid is drawn with
/// probability proportional to its squared distance from the chosen ones.
fn seed_centroids(points: &Array2<f64>, k: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let m = points.nrows();
    let mut chosen = vec![rng.random_range(0..m)];
    let mut d2: Vec<f64> = (0..m)
        .map(|i| euclidean(row(points, i), row(points, chosen[0])).powi(2))
        .collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = m - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            pick
        } else {
            rng.random_range(0..m)
        };
        chosen.push(next);
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(euclidean(row(points, i), row(points, next)).powi(2));
        }
    }
    let mut centroids = Array2::zeros((k, points.ncols()));
    for (c, &i) in chosen.iter().enumerate() {
        centroids.row_mut(c).assign(&points.row(i));
    }
    centroids
}

/// Lloyd iterations until the assignment stops changing or `max_iters`.
pub fn kmeans_fit(
    points: ArrayView2<'_, f64>,
    config: &KMeansConfig,
) -> Result<KMeansModel, DetectError> {
    config.validate()?;
    let m = points.nrows();
    if m < config.k {
        return Err(DetectError::TooFewPoints {
            needed: config.k,
            got: m,
        });
    }
    check_finite(points)?;
    let points = points.as_standard_layout().into_owned();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut centroids = seed_centroids(&points, config.k, &mut rng);
    let mut assignment = vec![usize::MAX; m];
    let mut objective_history = Vec::new();

    for _ in 0..config.max_iters.max(1) {
        let mut changed = false;
        let mut objective = 0.0;
        for (i, slot) in assignment.iter_mut().enumerate() {
            let (c, d) = nearest(&points, &centroids, i);
            objective += d * d;
            if *slot != c {
                *slot = c;
                changed = true;
            }
        }
        objective_history.push(objective);
        if !changed {
            break;
        }
        let mut sums = Array2::<f64>::zeros(centroids.dim());
        let mut counts = vec![0usize; config.k];
        for (i, &c) in assignment.iter().enumerate() {
            counts[c] += 1;
            let mut target = sums.row_mut(c);
            target += &points.row(i);
        }
        for (c, &count) in counts.iter().enumerate() {
            // An emptied cluster keeps its previous centroid.
            if count > 0 {
                let mean = &sums.row(c) / count as f64;
                centroids.row_mut(c).assign(&mean);
            }
        }
    }
    Ok(KMeansModel {
        centroids,
        assignment,
        objective_history,
    })
}

/// Nearest-rank quantile: the `ceil(q·m)`-th smallest value.
pub fn nearest_rank_quantile(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    // The small slack keeps e.g. 0.99 * 100 from rounding up to rank 100.
    let rank = ((q * m as f64) - 1e-9).ceil().clamp(1.0, m as f64) as usize;
    sorted[rank - 1]
}

/// Scores each point by its distance to the nearest centroid and flags those
/// above the configured quantile of all scores.
pub fn kmeans_detect(
    points: ArrayView2<'_, f64>,
    config: &KMeansConfig,
) -> Result<DetectorVerdict, DetectError> {
    let model = kmeans_fit(points, config)?;
    let points = points.as_standard_layout().into_owned();
    let score: Vec<f64> = (0..points.nrows())
        .map(|i| nearest(&points, &model.centroids, i).1)
        .collect();
    let threshold = nearest_rank_quantile(&score, config.quantile);
    let is_anomaly = score.iter().map(|&s| s > threshold).collect();
    Ok(DetectorVerdict {
        method_name: "kmeans".into(),
        params_echo: serde_json::to_value(config).expect("config serializes"),
        score,
        is_anomaly,
        threshold,
        cluster_label: Some(model.assignment.iter().map(|&c| c as i64).collect()),
    })
}
