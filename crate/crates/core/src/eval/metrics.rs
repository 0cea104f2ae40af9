use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::ingest::Label;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("{predictions} predictions for {labels} labels")]
    LengthMismatch { predictions: usize, labels: usize },
    #[error("metric is undefined on an empty confusion matrix")]
    DefinedOnEmpty,
}

/// Counts with `Anomaly` as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }
}

pub fn confusion(predicted: &[bool], truth: &[Label]) -> Result<ConfusionMatrix, EvalError> {
    if predicted.len() != truth.len() {
        return Err(EvalError::LengthMismatch {
            predictions: predicted.len(),
            labels: truth.len(),
        });
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, t) in predicted.iter().zip(truth) {
        match (p, t.is_anomaly()) {
            (true, true) => cm.tp += 1,
            (false, false) => cm.tn += 1,
            (true, false) => cm.fp += 1,
            (false, true) => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

/// A rate in `[0, 1]`. `undefined` marks a zero denominator, in which case
/// `value` is 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub value: f64,
    pub undefined: bool,
}

fn rate(numerator: usize, denominator: usize) -> Metric {
    if denominator == 0 {
        Metric {
            value: 0.0,
            undefined: true,
        }
    } else {
        Metric {
            value: numerator as f64 / denominator as f64,
            undefined: false,
        }
    }
}

pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64, EvalError> {
    if cm.total() == 0 {
        return Err(EvalError::DefinedOnEmpty);
    }
    Ok((cm.tp + cm.tn) as f64 / cm.total() as f64)
}

/// `sqrt(TPR · TNR)`.
pub fn g_mean(cm: &ConfusionMatrix) -> Metric {
    let tpr = rate(cm.tp, cm.tp + cm.fn_);
    let tnr = rate(cm.tn, cm.tn + cm.fp);
    Metric {
        value: (tpr.value * tnr.value).sqrt(),
        undefined: tpr.undefined || tnr.undefined,
    }
}

/// `fp / (fp + tn)`.
pub fn false_positive_rate(cm: &ConfusionMatrix) -> Metric {
    rate(cm.fp, cm.fp + cm.tn)
}

/// Scores of one (method, setting, data volume) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub method: String,
    pub setting: String,
    pub volume: usize,
    pub seed: u64,
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    pub g_mean: f64,
    pub fpr: f64,
    /// Set when G-Mean or FPR hit a zero denominator.
    pub undefined_rate: bool,
    pub params_echo: Value,
}

impl MetricsReport {
    pub fn new(
        method: &str,
        setting: &str,
        volume: usize,
        seed: u64,
        confusion: ConfusionMatrix,
        params_echo: Value,
    ) -> Result<Self, EvalError> {
        let gm = g_mean(&confusion);
        let fpr = false_positive_rate(&confusion);
        Ok(Self {
            method: method.into(),
            setting: setting.into(),
            volume,
            seed,
            accuracy: accuracy(&confusion)?,
            g_mean: gm.value,
            fpr: fpr.value,
            undefined_rate: gm.undefined || fpr.undefined,
            confusion,
            params_echo,
        })
    }
}
