//! Density peaks clustering with a delta-over-density anomaly score.
//!
//! For every point the detector counts neighbours strictly closer than the
//! truncation distance `d_c` (local density ρ, self excluded), finds the
//! distance δ to the nearest point earlier in the density ordering, and
//! picks as centers the points with both ρ ≥ `rho_min` and δ ≥ `delta_min`.
//! Remaining points inherit the cluster of their nearest denser neighbour.
//! The anomaly score is δ/ρ; points with ρ = 0 have an infinite score and
//! are always anomalous.
//!
//! The density ordering sorts by ρ descending and breaks ties by ascending
//! index, so "denser than" is a strict total order even when counts tie.

use std::io;

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

pub const DEFAULT_BATCH_CAP: usize = 10_000;

#[derive(Debug, Error, PartialEq)]
pub enum DpcError {
    #[error("input has no rows")]
    Empty,
    #[error("non-finite value at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("point {0} has no denser neighbour and is not a center")]
    MissingNeighbor(usize),
    #[error("no centers supplied")]
    NoCenters,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreMode {
    /// `δ / ρ` on raw counts and distances.
    Raw,
    /// `(δ / max δ) / (ρ / max ρ)`.
    #[default]
    Normalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DpcParams {
    /// Truncation distance for the density count.
    pub d_c: f64,
    pub rho_min: f64,
    pub delta_min: f64,
    /// Anomaly score threshold.
    pub a_th: f64,
    #[serde(default)]
    pub score_mode: ScoreMode,
    /// Longest run of rows clustered together; longer inputs are split into
    /// consecutive batches, each clustered on its own.
    #[serde(default = "default_batch_cap")]
    pub batch_cap: usize,
}

fn default_batch_cap() -> usize {
    DEFAULT_BATCH_CAP
}

impl Default for DpcParams {
    fn default() -> Self {
        Self {
            d_c: 0.15,
            rho_min: 8.0,
            delta_min: 0.18,
            a_th: 1.4,
            score_mode: ScoreMode::Normalized,
            batch_cap: DEFAULT_BATCH_CAP,
        }
    }
}

impl DpcParams {
    pub fn validate(&self) -> Result<(), DpcError> {
        let fail = |msg: String| Err(DpcError::InvalidParams(msg));
        if !(self.d_c.is_finite() && self.d_c > 0.0) {
            return fail(format!("d_c must be finite and positive, got {}", self.d_c));
        }
        if !(self.rho_min.is_finite() && self.rho_min >= 0.0) {
            return fail(format!(
                "rho_min must be finite and nonnegative, got {}",
                self.rho_min
            ));
        }
        if !(self.delta_min.is_finite() && self.delta_min >= 0.0) {
            return fail(format!(
                "delta_min must be finite and nonnegative, got {}",
                self.delta_min
            ));
        }
        if !(self.a_th.is_finite() && self.a_th > 0.0) {
            return fail(format!(
                "a_th must be finite and positive, got {}",
                self.a_th
            ));
        }
        if self.batch_cap == 0 {
            return fail("batch_cap must be at least 1".into());
        }
        Ok(())
    }
}

/// Euclidean distance, summed in index order.
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    let mut sum = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        sum += d * d;
    }
    sum.sqrt()
}

/// Anything that can report the distance between points `i` and `j`.
pub trait Distances: Sync {
    fn len(&self) -> usize;
    fn distance(&self, i: usize, j: usize) -> f64;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Dense symmetric `m × m` matrix of pairwise distances.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    m: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.m + j]
    }
}

impl Distances for DistanceMatrix {
    fn len(&self) -> usize {
        self.m
    }

    fn distance(&self, i: usize, j: usize) -> f64 {
        self.get(i, j)
    }
}

/// Computes distances on demand from the points, keeping memory at O(m·n).
pub struct PointDistances {
    points: Array2<f64>,
}

impl PointDistances {
    pub fn new(points: ArrayView2<'_, f64>) -> Result<Self, DpcError> {
        check_points(points)?;
        Ok(Self {
            points: points.as_standard_layout().into_owned(),
        })
    }

    fn row(&self, i: usize) -> &[f64] {
        self.points
            .row(i)
            .to_slice()
            .expect("standard layout rows are contiguous")
    }
}

impl Distances for PointDistances {
    fn len(&self) -> usize {
        self.points.nrows()
    }

    fn distance(&self, i: usize, j: usize) -> f64 {
        euclidean(self.row(i), self.row(j))
    }
}

fn check_points(points: ArrayView2<'_, f64>) -> Result<(), DpcError> {
    if points.nrows() == 0 {
        return Err(DpcError::Empty);
    }
    match points.indexed_iter().find(|(_, v)| !v.is_finite()) {
        Some(((row, column), _)) => Err(DpcError::NonFinite { row, column }),
        None => Ok(()),
    }
}

/// Full distance matrix; the upper triangle is computed and mirrored.
pub fn pairwise_distances(points: ArrayView2<'_, f64>) -> Result<DistanceMatrix, DpcError> {
    let source = PointDistances::new(points)?;
    let m = source.len();
    let upper: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|i| ((i + 1)..m).map(|j| source.distance(i, j)).collect())
        .collect();
    let mut data = vec![0.0; m * m];
    for (i, row) in upper.iter().enumerate() {
        for (offset, &d) in row.iter().enumerate() {
            let j = i + 1 + offset;
            data[i * m + j] = d;
            data[j * m + i] = d;
        }
    }
    Ok(DistanceMatrix { m, data })
}

/// `ρ_i = |{ j ≠ i : d(i, j) < d_c }|`.
pub fn local_density<D: Distances + ?Sized>(dist: &D, d_c: f64) -> Vec<usize> {
    let m = dist.len();
    (0..m)
        .into_par_iter()
        .map(|i| {
            (0..m)
                .filter(|&j| j != i && dist.distance(i, j) < d_c)
                .count()
        })
        .collect()
}

/// Density ordering with δ and the nearest denser neighbour of every point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpcState {
    pub rho: Vec<usize>,
    pub delta: Vec<f64>,
    /// `None` only for `order[0]`.
    pub nneigh: Vec<Option<usize>>,
    /// Indices sorted by ρ descending, then index ascending.
    pub order: Vec<usize>,
}

impl DpcState {
    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }
}

pub fn density_order(rho: &[usize]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..rho.len()).collect();
    order.sort_by(|&a, &b| rho[b].cmp(&rho[a]).then(a.cmp(&b)));
    order
}

pub fn delta_and_neighbors<D: Distances + ?Sized>(dist: &D, rho: &[usize]) -> DpcState {
    let m = rho.len();
    debug_assert_eq!(m, dist.len());
    let order = density_order(rho);
    let mut delta = vec![0.0; m];
    let mut nneigh = vec![None; m];
    if m == 0 {
        return DpcState {
            rho: rho.to_vec(),
            delta,
            nneigh,
            order,
        };
    }

    let top = order[0];
    delta[top] = (0..m).map(|j| dist.distance(top, j)).fold(0.0, f64::max);

    let nearest: Vec<(usize, f64, usize)> = (1..m)
        .into_par_iter()
        .map(|k| {
            let i = order[k];
            let mut best = (f64::INFINITY, usize::MAX);
            for &j in &order[..k] {
                let d = dist.distance(i, j);
                if d < best.0 || (d == best.0 && j < best.1) {
                    best = (d, j);
                }
            }
            (i, best.0, best.1)
        })
        .collect();
    for (i, d, j) in nearest {
        delta[i] = d;
        nneigh[i] = Some(j);
    }
    DpcState {
        rho: rho.to_vec(),
        delta,
        nneigh,
        order,
    }
}

/// Points with `ρ ≥ rho_min` and `δ ≥ delta_min`, ascending. When none
/// qualify, the point with the largest `ρ·δ` (earliest in density order on
/// ties) is used alone.
///
/// The densest point has the largest ρ and δ of all points, so it is a
/// center whenever any point is.
pub fn select_centers(state: &DpcState, rho_min: f64, delta_min: f64) -> Vec<usize> {
    let centers: Vec<usize> = (0..state.len())
        .filter(|&i| state.rho[i] as f64 >= rho_min && state.delta[i] >= delta_min)
        .collect();
    if !centers.is_empty() || state.is_empty() {
        return centers;
    }
    let gamma = |i: usize| state.rho[i] as f64 * state.delta[i];
    let best = state.order.iter().copied().fold(state.order[0], |best, i| {
        if gamma(i) > gamma(best) {
            i
        } else {
            best
        }
    });
    vec![best]
}

/// Labels every point with the index of its cluster center. Points are
/// visited densest first, so each non-center's neighbour is already labelled.
pub fn assign_clusters(state: &DpcState, centers: &[usize]) -> Result<Vec<i64>, DpcError> {
    if centers.is_empty() && !state.is_empty() {
        return Err(DpcError::NoCenters);
    }
    let m = state.len();
    let mut is_center = vec![false; m];
    for &c in centers {
        is_center[c] = true;
    }
    let mut labels = vec![-1i64; m];
    for &i in &state.order {
        labels[i] = if is_center[i] {
            i as i64
        } else {
            let j = state.nneigh[i].ok_or(DpcError::MissingNeighbor(i))?;
            labels[j]
        };
    }
    Ok(labels)
}

/// Per-point anomaly score; `f64::INFINITY` when ρ = 0.
pub fn anomaly_scores(state: &DpcState, mode: ScoreMode) -> Vec<f64> {
    let score = |rho: f64, delta: f64| {
        if rho == 0.0 {
            f64::INFINITY
        } else {
            delta / rho
        }
    };
    match mode {
        ScoreMode::Raw => state
            .rho
            .iter()
            .zip(&state.delta)
            .map(|(&r, &d)| score(r as f64, d))
            .collect(),
        ScoreMode::Normalized => {
            let max_rho = state.rho.iter().copied().max().unwrap_or(0) as f64;
            let max_delta = state.delta.iter().copied().fold(0.0, f64::max);
            state
                .rho
                .iter()
                .zip(&state.delta)
                .map(|(&r, &d)| {
                    let rho_hat = if max_rho > 0.0 {
                        r as f64 / max_rho
                    } else {
                        0.0
                    };
                    let delta_hat = if max_delta > 0.0 { d / max_delta } else { 0.0 };
                    score(rho_hat, delta_hat)
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpcResult {
    pub params: DpcParams,
    pub state: DpcState,
    pub centers: Vec<usize>,
    /// Center index of each point's cluster, or -1 for anomalies.
    pub cluster_label: Vec<i64>,
    pub score: Vec<f64>,
    pub is_anomaly: Vec<bool>,
}

/// Runs the whole detector on one batch of points.
pub fn detect(points: ArrayView2<'_, f64>, params: &DpcParams) -> Result<DpcResult, DpcError> {
    params.validate()?;
    let dist = PointDistances::new(points)?;
    detect_with(&dist, params)
}

/// Same as [`detect`] over any distance source.
pub fn detect_with<D: Distances + ?Sized>(
    dist: &D,
    params: &DpcParams,
) -> Result<DpcResult, DpcError> {
    params.validate()?;
    if dist.is_empty() {
        return Err(DpcError::Empty);
    }
    let rho = local_density(dist, params.d_c);
    let state = delta_and_neighbors(dist, &rho);
    let centers = select_centers(&state, params.rho_min, params.delta_min);
    let mut cluster_label = assign_clusters(&state, &centers)?;
    let score = anomaly_scores(&state, params.score_mode);
    let is_anomaly: Vec<bool> = state
        .rho
        .iter()
        .zip(&score)
        .map(|(&r, &a)| r == 0 || a > params.a_th)
        .collect();
    for (label, &flag) in cluster_label.iter_mut().zip(&is_anomaly) {
        if flag {
            *label = -1;
        }
    }
    Ok(DpcResult {
        params: *params,
        state,
        centers,
        cluster_label,
        score,
        is_anomaly,
    })
}

/// Splits the rows into consecutive batches of at most `batch_cap` and
/// clusters each independently. Indices inside each result are local to
/// its batch.
pub fn detect_batched(
    points: ArrayView2<'_, f64>,
    params: &DpcParams,
) -> Result<Vec<DpcResult>, DpcError> {
    params.validate()?;
    check_points(points)?;
    points
        .axis_chunks_iter(ndarray::Axis(0), params.batch_cap)
        .map(|batch| detect(batch, params))
        .collect()
}

fn score_value(score: f64) -> Value {
    if score.is_infinite() {
        json!("inf")
    } else {
        json!(score)
    }
}

fn score_text(score: f64) -> String {
    if score.is_infinite() {
        "inf".into()
    } else {
        score.to_string()
    }
}

impl DpcResult {
    pub fn len(&self) -> usize {
        self.is_anomaly.len()
    }

    pub fn is_empty(&self) -> bool {
        self.is_anomaly.is_empty()
    }

    pub fn anomaly_count(&self) -> usize {
        self.is_anomaly.iter().filter(|&&a| a).count()
    }

    /// Parameters, centers and one record per point.
    pub fn to_json(&self) -> Value {
        let points: Vec<Value> = (0..self.len())
            .map(|i| {
                json!({
                    "index": i,
                    "rho": self.state.rho[i],
                    "delta": self.state.delta[i],
                    "score": score_value(self.score[i]),
                    "label": self.cluster_label[i],
                    "is_anomaly": self.is_anomaly[i],
                })
            })
            .collect();
        json!({
            "params": self.params,
            "centers": self.centers,
            "points": points,
        })
    }

    /// Decision-graph data: `index,rho,delta,score,label,is_anomaly`.
    pub fn write_csv<W: io::Write>(&self, writer: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["index", "rho", "delta", "score", "label", "is_anomaly"])?;
        for i in 0..self.len() {
            out.write_record([
                i.to_string(),
                self.state.rho[i].to_string(),
                self.state.delta[i].to_string(),
                score_text(self.score[i]),
                self.cluster_label[i].to_string(),
                self.is_anomaly[i].to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}
