//! Greedy top-down decision tree with multiway categorical splits.
//!
//! Each split fans out on a feature's three possible values and a feature
//! is used at most once per path. The split is chosen by impurity gain
//! (entropy by default); among equal gains the earliest feature in subset
//! order wins, which keeps training deterministic.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{training_view, LearnError, ModelParams, TrainedModel};
use crate::encode::{Dataset, FeatureName, Label};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitCriterion {
    Gini,
    Entropy,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreeConfig {
    /// `None` grows until pure or out of features.
    pub max_depth: Option<u32>,
    /// Minimum records in every non-empty child of an eligible split.
    pub min_leaf: usize,
    pub criterion: SplitCriterion,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_depth: None,
            min_leaf: 1,
            criterion: SplitCriterion::Entropy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        label: Label,
    },
    Split {
        feature: FeatureName,
        /// Position of `feature` in the model's subset; prediction inputs
        /// arrive in subset order.
        position: usize,
        /// Fallback label for values never seen at this node.
        majority: Label,
        /// Children indexed by ternary value (-1, 0, 1).
        children: [Option<Box<TreeNode>>; 3],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTreeParams {
    pub root: TreeNode,
}

fn label_counts(labels: &[Label], rows: &[usize]) -> [usize; 2] {
    let mut counts = [0usize; 2];
    for &r in rows {
        counts[labels[r].index()] += 1;
    }
    counts
}

/// Majority label; a tie is non-evidence and resolves to legitimate.
fn majority_of(counts: [usize; 2]) -> Label {
    if counts[Label::Phishing.index()] > counts[Label::Legitimate.index()] {
        Label::Phishing
    } else {
        Label::Legitimate
    }
}

fn impurity(counts: [usize; 2], criterion: SplitCriterion) -> f64 {
    let total = (counts[0] + counts[1]) as f64;
    if total == 0.0 {
        return 0.0;
    }
    match criterion {
        SplitCriterion::Gini => {
            let p0 = counts[0] as f64 / total;
            let p1 = counts[1] as f64 / total;
            1.0 - p0 * p0 - p1 * p1
        }
        SplitCriterion::Entropy => counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / total;
                -p * p.log2()
            })
            .sum(),
    }
}

/// Shared growth context for plain trees and forest members.
pub(super) struct Grower<'a> {
    pub values: &'a [Vec<usize>],
    pub labels: &'a [Label],
    pub subset: &'a [FeatureName],
    pub config: &'a TreeConfig,
    /// Present for forests: per-split random feature subsetting.
    pub rng: Option<&'a mut ChaCha8Rng>,
    pub features_per_split: usize,
}

impl Grower<'_> {
    pub fn grow(&mut self, rows: &[usize], remaining: &[usize], depth: u32) -> TreeNode {
        let counts = label_counts(self.labels, rows);
        let majority = majority_of(counts);
        if counts[0] == 0 || counts[1] == 0 {
            return TreeNode::Leaf { label: majority };
        }
        if remaining.is_empty() || self.config.max_depth.is_some_and(|d| depth >= d) {
            return TreeNode::Leaf { label: majority };
        }

        let candidates: Vec<usize> = match &mut self.rng {
            Some(rng) if self.features_per_split < remaining.len() => {
                let mut picks =
                    rand::seq::index::sample(rng, remaining.len(), self.features_per_split)
                        .into_vec();
                // Keep subset order so gain ties break identically to a
                // plain tree.
                picks.sort_unstable();
                picks.iter().map(|&i| remaining[i]).collect()
            }
            _ => remaining.to_vec(),
        };

        let parent_impurity = impurity(counts, self.config.criterion);
        let total = rows.len() as f64;
        let mut best: Option<(f64, usize, [Vec<usize>; 3])> = None;
        for &feature_pos in &candidates {
            let mut buckets: [Vec<usize>; 3] = [Vec::new(), Vec::new(), Vec::new()];
            for &r in rows {
                buckets[self.values[r][feature_pos]].push(r);
            }
            let nonempty = buckets.iter().filter(|b| !b.is_empty()).count();
            if nonempty < 2 {
                continue;
            }
            if buckets
                .iter()
                .any(|b| !b.is_empty() && b.len() < self.config.min_leaf)
            {
                continue;
            }
            let weighted: f64 = buckets
                .iter()
                .filter(|b| !b.is_empty())
                .map(|b| {
                    let child = label_counts(self.labels, b);
                    (b.len() as f64 / total) * impurity(child, self.config.criterion)
                })
                .sum();
            let gain = parent_impurity - weighted;
            if best.as_ref().is_none_or(|(g, _, _)| gain > *g) {
                best = Some((gain, feature_pos, buckets));
            }
        }

        let Some((gain, feature_pos, buckets)) = best else {
            return TreeNode::Leaf { label: majority };
        };
        if gain <= 1e-12 {
            return TreeNode::Leaf { label: majority };
        }

        let child_remaining: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|&p| p != feature_pos)
            .collect();
        let children = buckets.map(|bucket| {
            if bucket.is_empty() {
                None
            } else {
                Some(Box::new(self.grow(&bucket, &child_remaining, depth + 1)))
            }
        });
        TreeNode::Split {
            feature: self.subset[feature_pos],
            position: feature_pos,
            majority,
            children,
        }
    }
}

/// Builds one tree from the whole dataset.
pub fn train_decision_tree(
    ds: &Dataset,
    subset: &[FeatureName],
    config: &TreeConfig,
) -> Result<TrainedModel, LearnError> {
    let (values, labels) = training_view(ds, subset)?;
    let rows: Vec<usize> = (0..values.len()).collect();
    let remaining: Vec<usize> = (0..subset.len()).collect();
    let mut grower = Grower {
        values: &values,
        labels: &labels,
        subset,
        config,
        rng: None,
        features_per_split: subset.len(),
    };
    let root = grower.grow(&rows, &remaining, 0);
    Ok(TrainedModel::new(
        subset.to_vec(),
        0,
        ModelParams::DecisionTree(DecisionTreeParams { root }),
    ))
}

/// Walks the tree over values in subset order; a missing branch falls back
/// to the node's majority label.
pub(super) fn predict_tree(node: &TreeNode, values: &[usize]) -> Label {
    match node {
        TreeNode::Leaf { label } => *label,
        TreeNode::Split {
            position,
            majority,
            children,
            ..
        } => match &children[values[*position]] {
            Some(child) => predict_tree(child, values),
            None => *majority,
        },
    }
}
