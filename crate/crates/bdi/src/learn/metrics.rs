//! Confusion counts and the derived classification metrics. Phishing is
//! the positive class throughout.

use serde::{Deserialize, Serialize};

use super::LearnError;
use crate::encode::Label;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub true_pos: u64,
    pub false_neg: u64,
    pub true_neg: u64,
    pub false_pos: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.true_pos + self.false_neg + self.true_neg + self.false_pos
    }

    pub fn record(&mut self, actual: Label, predicted: Label) {
        match (actual, predicted) {
            (Label::Phishing, Label::Phishing) => self.true_pos += 1,
            (Label::Phishing, Label::Legitimate) => self.false_neg += 1,
            (Label::Legitimate, Label::Legitimate) => self.true_neg += 1,
            (Label::Legitimate, Label::Phishing) => self.false_pos += 1,
        }
    }

    pub fn merge(&mut self, other: &ConfusionCounts) {
        self.true_pos += other.true_pos;
        self.false_neg += other.false_neg;
        self.true_neg += other.true_neg;
        self.false_pos += other.false_pos;
    }
}

/// The six standard metrics plus wall-clock training and prediction times
/// in seconds. Metrics whose denominator was zero are reported as 0 and
/// listed in `degenerate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub tpr: f64,
    pub fpr: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub accuracy: f64,
    pub train_time: f64,
    pub predict_time: f64,
    pub degenerate: Vec<String>,
}

/// Derives the metric set from pooled confusion counts.
pub fn compute_metrics(counts: &ConfusionCounts) -> Result<MetricsReport, LearnError> {
    if counts.total() == 0 {
        return Err(LearnError::EmptyConfusion);
    }
    let tp = counts.true_pos as f64;
    let fn_ = counts.false_neg as f64;
    let tn = counts.true_neg as f64;
    let fp = counts.false_pos as f64;
    let mut degenerate = Vec::new();

    let mut guarded = |num: f64, den: f64, name: &str| {
        if den == 0.0 {
            degenerate.push(name.to_string());
            0.0
        } else {
            num / den
        }
    };

    let tpr = guarded(tp, tp + fn_, "tpr");
    let fpr = guarded(fp, fp + tn, "fpr");
    let precision = guarded(tp, tp + fp, "precision");
    let recall = tpr;
    let f_measure = guarded(2.0 * precision * recall, precision + recall, "f_measure");
    let accuracy = (tp + tn) / (tp + tn + fp + fn_);

    Ok(MetricsReport {
        tpr,
        fpr,
        precision,
        recall,
        f_measure,
        accuracy,
        train_time: 0.0,
        predict_time: 0.0,
        degenerate,
    })
}
