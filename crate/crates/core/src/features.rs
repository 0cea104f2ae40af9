//! Windowed time-domain moments and frequency-domain features.
//!
//! A stream of `m` samples with `n` dimensions is cut into windows of
//! `window_len` rows. Each dimension of each window yields its mean,
//! population variance, skewness, the top-K spectral magnitudes (DC bin
//! excluded) and the total power over the non-DC half spectrum, giving
//! `n * (4 + K)` features per window.

use std::sync::Arc;

use ndarray::{s, Array2, ArrayView1, ArrayView2};
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_TOP_K: usize = 5;

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("stream of {len} rows is shorter than the window length {window_len}")]
    StreamTooShort { len: usize, window_len: usize },
    #[error("window of {0} rows is too small for skewness (need at least 3)")]
    WindowTooSmall(usize),
    #[error("cannot transform an empty series")]
    EmptySeries,
    #[error("windows differ in shape")]
    HeterogeneousWindows,
    #[error("invalid window config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowMode {
    /// Non-overlapping windows; the stride is ignored and equals the length.
    Tumbling,
    Sliding,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    pub window_len: usize,
    pub stride: usize,
    pub mode: WindowMode,
}

impl WindowConfig {
    pub fn tumbling(window_len: usize) -> Self {
        Self {
            window_len,
            stride: window_len,
            mode: WindowMode::Tumbling,
        }
    }

    pub fn sliding(window_len: usize, stride: usize) -> Self {
        Self {
            window_len,
            stride,
            mode: WindowMode::Sliding,
        }
    }

    pub fn effective_stride(&self) -> usize {
        match self.mode {
            WindowMode::Tumbling => self.window_len,
            WindowMode::Sliding => self.stride,
        }
    }

    pub fn validate(&self) -> Result<(), FeatureError> {
        if self.window_len == 0 {
            return Err(FeatureError::InvalidConfig(
                "window_len must be at least 1".into(),
            ));
        }
        if self.effective_stride() == 0 {
            return Err(FeatureError::InvalidConfig(
                "stride must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self::tumbling(16)
    }
}

/// A full window of consecutive stream rows.
#[derive(Debug, Clone)]
pub struct TimeWindow<'a> {
    pub start_index: usize,
    pub data: ArrayView2<'a, f64>,
}

impl TimeWindow<'_> {
    pub fn len(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.nrows() == 0
    }

    pub fn dims(&self) -> usize {
        self.data.ncols()
    }
}

/// Cuts `matrix` into full windows starting at `0, stride, 2*stride, ...`.
/// A trailing partial window is dropped.
pub fn segment_windows<'a>(
    matrix: &'a Array2<f64>,
    config: &WindowConfig,
) -> Result<Vec<TimeWindow<'a>>, FeatureError> {
    config.validate()?;
    let (m, len) = (matrix.nrows(), config.window_len);
    if m < len {
        return Err(FeatureError::StreamTooShort {
            len: m,
            window_len: len,
        });
    }
    Ok((0..=m - len)
        .step_by(config.effective_stride())
        .map(|start| TimeWindow {
            start_index: start,
            data: matrix.slice(s![start..start + len, ..]),
        })
        .collect())
}

/// Per-dimension mean, population variance and skewness of one window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowStats {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub skewness: Vec<f64>,
}

/// Moments of a single series: `(mean, variance, skewness)`.
///
/// Variance uses the `1/N` form. Skewness is
/// `N / ((N-1)(N-2)) * sum(((x - mean) / sd)^3)` and is 0 when the series is
/// constant (sd at rounding-noise level relative to the values).
pub fn series_moments(series: ArrayView1<'_, f64>) -> Result<(f64, f64, f64), FeatureError> {
    let n = series.len();
    if n < 3 {
        return Err(FeatureError::WindowTooSmall(n));
    }
    let nf = n as f64;
    let mean = series.sum() / nf;
    let variance = series.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / nf;
    let sd = variance.sqrt();
    let scale = series.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let skewness = if sd <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
        0.0
    } else {
        let cubes: f64 = series.iter().map(|x| ((x - mean) / sd).powi(3)).sum();
        nf / ((nf - 1.0) * (nf - 2.0)) * cubes
    };
    Ok((mean, variance, skewness))
}

pub fn compute_moments(window: &TimeWindow<'_>) -> Result<WindowStats, FeatureError> {
    let dims = window.dims();
    let mut stats = WindowStats {
        mean: Vec::with_capacity(dims),
        variance: Vec::with_capacity(dims),
        skewness: Vec::with_capacity(dims),
    };
    for column in window.data.columns() {
        let (mean, variance, skewness) = series_moments(column)?;
        stats.mean.push(mean);
        stats.variance.push(variance);
        stats.skewness.push(skewness);
    }
    Ok(stats)
}

/// Fourier coefficients of a real window with derived magnitudes and
/// periodogram power `|X(f)|^2 / N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub coefficients: Vec<(f64, f64)>,
    pub magnitudes: Vec<f64>,
    pub psd: Vec<f64>,
}

impl Spectrum {
    fn from_coefficients(coefficients: Vec<Complex64>) -> Self {
        let n = coefficients.len() as f64;
        let magnitudes: Vec<f64> = coefficients.iter().map(|c| c.norm()).collect();
        let psd = magnitudes.iter().map(|m| m * m / n).collect();
        Self {
            coefficients: coefficients.iter().map(|c| (c.re, c.im)).collect(),
            magnitudes,
            psd,
        }
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn coefficient(&self, f: usize) -> Complex64 {
        let (re, im) = self.coefficients[f];
        Complex64::new(re, im)
    }
}

/// `X(f) = sum_t x_t exp(-2 pi i f t / N)` by direct O(N^2) summation.
pub fn dft_direct(series: &[f64]) -> Result<Spectrum, FeatureError> {
    if series.is_empty() {
        return Err(FeatureError::EmptySeries);
    }
    let n = series.len();
    let coefficients = (0..n)
        .map(|f| {
            series
                .iter()
                .enumerate()
                .map(|(t, &x)| {
                    // Reduce f*t mod n first so the angle stays in [0, 2 pi).
                    let angle = -2.0 * std::f64::consts::PI * ((f * t) % n) as f64 / n as f64;
                    Complex64::from_polar(x, angle)
                })
                .sum()
        })
        .collect();
    Ok(Spectrum::from_coefficients(coefficients))
}

fn plan(n: usize) -> Arc<dyn Fft<f64>> {
    FftPlanner::new().plan_fft_forward(n)
}

fn dft_planned(fft: &dyn Fft<f64>, series: ArrayView1<'_, f64>) -> Spectrum {
    let mut buffer: Vec<Complex64> = series.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fft.process(&mut buffer);
    Spectrum::from_coefficients(buffer)
}

/// Same transform as [`dft_direct`], computed with an FFT.
pub fn dft(series: &[f64]) -> Result<Spectrum, FeatureError> {
    if series.is_empty() {
        return Err(FeatureError::EmptySeries);
    }
    Ok(dft_planned(
        plan(series.len()).as_ref(),
        ArrayView1::from(series),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralFeatures {
    pub top_magnitudes: Vec<f64>,
    pub total_psd: f64,
}

/// The `k` largest magnitudes among bins `1..=N/2`, descending with lower
/// frequency first on ties and zero-padded to length `k`, plus the summed
/// power over the same bins.
pub fn spectral_features(spectrum: &Spectrum, k: usize) -> SpectralFeatures {
    let usable = 1..=spectrum.len() / 2;
    let mut bins: Vec<usize> = usable.clone().collect();
    // Stable sort keeps ascending frequency among equal magnitudes.
    bins.sort_by(|&a, &b| spectrum.magnitudes[b].total_cmp(&spectrum.magnitudes[a]));
    let mut top_magnitudes: Vec<f64> = bins
        .iter()
        .take(k)
        .map(|&f| spectrum.magnitudes[f])
        .collect();
    top_magnitudes.resize(k, 0.0);
    let total_psd = usable.map(|f| spectrum.psd[f]).sum();
    SpectralFeatures {
        top_magnitudes,
        total_psd,
    }
}

/// One row per window plus the column names in concatenation order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub values: Array2<f64>,
    pub layout: Vec<String>,
}

/// Column names for `n` input dimensions named `names`.
pub fn feature_layout(names: &[String], k: usize) -> Vec<String> {
    let mut layout = Vec::with_capacity(names.len() * (4 + k));
    for name in names {
        layout.push(format!("{name}.mean"));
        layout.push(format!("{name}.var"));
        layout.push(format!("{name}.skew"));
        layout.extend((1..=k).map(|i| format!("{name}.mag{i}")));
        layout.push(format!("{name}.psd"));
    }
    layout
}

fn window_row(
    window: &TimeWindow<'_>,
    fft: &dyn Fft<f64>,
    k: usize,
) -> Result<Vec<f64>, FeatureError> {
    let mut row = Vec::with_capacity(window.dims() * (4 + k));
    for column in window.data.columns() {
        let (mean, variance, skewness) = series_moments(column)?;
        let spectral = spectral_features(&dft_planned(fft, column), k);
        row.extend([mean, variance, skewness]);
        row.extend(spectral.top_magnitudes);
        row.push(spectral.total_psd);
    }
    Ok(row)
}

/// Feature rows for every window, in window order.
pub fn assemble_features(
    windows: &[TimeWindow<'_>],
    k: usize,
) -> Result<FeatureMatrix, FeatureError> {
    let first = windows.first().ok_or(FeatureError::HeterogeneousWindows)?;
    let (len, dims) = (first.len(), first.dims());
    if windows.iter().any(|w| w.len() != len || w.dims() != dims) {
        return Err(FeatureError::HeterogeneousWindows);
    }
    if len < 3 {
        return Err(FeatureError::WindowTooSmall(len));
    }
    if k == 0 {
        return Err(FeatureError::InvalidConfig(
            "top-k must be at least 1".into(),
        ));
    }
    let fft = plan(len);
    let rows: Vec<Vec<f64>> = windows
        .par_iter()
        .map(|w| window_row(w, fft.as_ref(), k))
        .collect::<Result<_, _>>()?;
    let width = dims * (4 + k);
    let values = Array2::from_shape_vec((rows.len(), width), rows.concat())
        .expect("every row has n * (4 + k) entries");
    let names: Vec<String> = (0..dims).map(|j| format!("x{j}")).collect();
    Ok(FeatureMatrix {
        values,
        layout: feature_layout(&names, k),
    })
}
