//! Categorical naive Bayes over the ternary feature values with additive
//! smoothing.

use serde::{Deserialize, Serialize};

use super::{training_view, LearnError, ModelParams, TrainedModel};
use crate::encode::{Dataset, FeatureName, Label};

/// Raw class and conditional value counts; probabilities are derived at
/// prediction time so the stored state is exact integers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NaiveBayesParams {
    pub alpha: f64,
    /// Records per class, legitimate first.
    pub class_counts: [u64; 2],
    /// `value_counts[feature][class][value]` with values indexed -1, 0, 1.
    pub value_counts: Vec<[[u64; 3]; 2]>,
}

/// Trains the classifier on `subset`, storing class priors and smoothed
/// per-feature conditional value counts.
pub fn train_naive_bayes(
    ds: &Dataset,
    subset: &[FeatureName],
    laplace_alpha: f64,
) -> Result<TrainedModel, LearnError> {
    let (values, labels) = training_view(ds, subset)?;
    let mut class_counts = [0u64; 2];
    let mut value_counts = vec![[[0u64; 3]; 2]; subset.len()];
    for (row, label) in values.iter().zip(&labels) {
        class_counts[label.index()] += 1;
        for (fi, &v) in row.iter().enumerate() {
            value_counts[fi][label.index()][v] += 1;
        }
    }
    Ok(TrainedModel::new(
        subset.to_vec(),
        0,
        ModelParams::NaiveBayes(NaiveBayesParams {
            alpha: laplace_alpha,
            class_counts,
            value_counts,
        }),
    ))
}

/// Log-posterior argmax; an exact tie resolves to legitimate.
pub(super) fn predict_nb(params: &NaiveBayesParams, values: &[usize]) -> Label {
    let total = (params.class_counts[0] + params.class_counts[1]) as f64;
    let mut scores = [0.0f64; 2];
    for (class, slot) in scores.iter_mut().enumerate() {
        let n_c = params.class_counts[class] as f64;
        let mut score = (n_c / total).ln();
        for (fi, &v) in values.iter().enumerate() {
            let count = params.value_counts[fi][class][v] as f64;
            score += ((count + params.alpha) / (n_c + 3.0 * params.alpha)).ln();
        }
        *slot = score;
    }
    if scores[Label::Phishing.index()] > scores[Label::Legitimate.index()] {
        Label::Phishing
    } else {
        Label::Legitimate
    }
}
