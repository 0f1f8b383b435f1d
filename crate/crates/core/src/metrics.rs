//! Confusion-matrix metrics. Tampered is the positive class; the miss
//! rate (false negatives over actual positives) is the per-sample
//! detection failure rate reported everywhere else.

use serde::{Deserialize, Serialize};

use crate::dataset::Label;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub true_pos: u64,
    pub false_pos: u64,
    pub false_neg: u64,
    pub true_neg: u64,
}

impl ConfusionMatrix {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Label, Label)>) -> ConfusionMatrix {
        let mut cm = ConfusionMatrix::default();
        for (truth, predicted) in pairs {
            match (truth, predicted) {
                (Label::Tampered, Label::Tampered) => cm.true_pos += 1,
                (Label::Clean, Label::Tampered) => cm.false_pos += 1,
                (Label::Tampered, Label::Clean) => cm.false_neg += 1,
                (Label::Clean, Label::Clean) => cm.true_neg += 1,
            }
        }
        cm
    }

    pub fn total(&self) -> u64 {
        self.true_pos + self.false_pos + self.false_neg + self.true_neg
    }

    pub fn positives(&self) -> u64 {
        self.true_pos + self.false_neg
    }
}

/// Metrics derived from one confusion matrix.
///
/// Undefined precision (no predicted positives) and undefined recall (no
/// actual positives) are reported as 1.0 with the corresponding
/// `*_defined` flag cleared. `miss_rate` is None exactly when recall is
/// undefined; rows like clean controls report it as NA.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub miss_rate: Option<f64>,
    pub precision_defined: bool,
    pub recall_defined: bool,
    pub run_failed: bool,
}

/// Compute the standard metrics; `run_failure_threshold` sets the
/// per-run failure boolean (miss rate strictly above the threshold).
pub fn compute_metrics(cm: &ConfusionMatrix, run_failure_threshold: f64) -> Result<EvalMetrics> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::EmptyConfusion);
    }
    let accuracy = (cm.true_pos + cm.true_neg) as f64 / total as f64;
    let predicted_pos = cm.true_pos + cm.false_pos;
    let (precision, precision_defined) = if predicted_pos == 0 {
        (1.0, false)
    } else {
        (cm.true_pos as f64 / predicted_pos as f64, true)
    };
    let actual_pos = cm.positives();
    let (recall, recall_defined) = if actual_pos == 0 {
        (1.0, false)
    } else {
        (cm.true_pos as f64 / actual_pos as f64, true)
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    let miss_rate = recall_defined.then(|| cm.false_neg as f64 / actual_pos as f64);
    let run_failed = miss_rate.is_some_and(|m| m > run_failure_threshold);
    Ok(EvalMetrics {
        accuracy,
        precision,
        recall,
        f1,
        miss_rate,
        precision_defined,
        recall_defined,
        run_failed,
    })
}
