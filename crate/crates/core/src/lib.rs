//! Unsupervised anomaly detection for dynamic network data flows.
//!
//! The pipeline segments a stream into windows and extracts time-domain
//! moments and spectral features ([`features`]), normalizes and reduces them
//! with PCA ([`pca`]), then scores every point with density peaks clustering
//! ([`dpc`]). Three classical detectors ([`baselines`]) share the same
//! verdict shape so that [`eval`] can compare them on accuracy, G-Mean and
//! false positive rate across data volumes.

pub mod baselines;
pub mod dpc;
pub mod eval;
pub mod features;
pub mod ingest;
pub mod pca;
pub mod pipeline;
pub mod rng;

pub use baselines::{DetectorConfig, DetectorVerdict};
pub use dpc::{DpcParams, DpcResult, ScoreMode};
pub use ingest::{Label, LabeledDataset};
pub use pca::PcaModel;
