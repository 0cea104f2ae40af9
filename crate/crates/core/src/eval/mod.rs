//! Metrics and data-volume sweeps.

mod metrics;
mod sweep;

pub use metrics::{
    accuracy, confusion, false_positive_rate, g_mean, ConfusionMatrix, EvalError, Metric,
    MetricsReport,
};
pub use sweep::{
    default_dpc_settings, default_methods, run_sweep, CellOutcome, MethodSpec, SweepCell,
    SweepReport, SweepSource, SweepSpec, DEFAULT_VOLUMES,
};
