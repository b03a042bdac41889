//! Bagged random forest: bootstrap-sampled trees with per-split random
//! feature subsetting, majority vote at prediction time.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{Grower, TreeConfig, TreeNode};
use super::{mix_seed, training_view, LearnError, ModelParams, TrainedModel};
use crate::encode::{Dataset, FeatureName, Label};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Candidate features per split; `None` uses floor(sqrt(subset size)).
    pub features_per_split: Option<usize>,
    /// Sampling with replacement per tree; turning it off trains every tree
    /// on the full dataset.
    pub bootstrap: bool,
    pub tree: TreeConfig,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            features_per_split: None,
            bootstrap: true,
            tree: TreeConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForestParams {
    pub n_trees: usize,
    pub features_per_split: usize,
    pub bootstrap: bool,
    pub trees: Vec<TreeNode>,
}

/// Trains `n_trees` trees, each on its own bootstrap sample and RNG stream
/// derived from the seed, so training is reproducible bit-for-bit.
pub fn train_random_forest(
    ds: &Dataset,
    subset: &[FeatureName],
    config: &ForestConfig,
    seed: u64,
) -> Result<TrainedModel, LearnError> {
    if config.n_trees == 0 {
        return Err(LearnError::EmptyDataset);
    }
    let (values, labels) = training_view(ds, subset)?;
    let n = values.len();
    let features_per_split = config
        .features_per_split
        .unwrap_or_else(|| (subset.len() as f64).sqrt().floor() as usize)
        .clamp(1, subset.len());

    let remaining: Vec<usize> = (0..subset.len()).collect();
    let mut trees = Vec::with_capacity(config.n_trees);
    for t in 0..config.n_trees {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, &[t as u64]));
        let rows: Vec<usize> = if config.bootstrap {
            (0..n).map(|_| rng.random_range(0..n)).collect()
        } else {
            (0..n).collect()
        };
        let mut grower = Grower {
            values: &values,
            labels: &labels,
            subset,
            config: &config.tree,
            rng: Some(&mut rng),
            features_per_split,
        };
        trees.push(grower.grow(&rows, &remaining, 0));
    }

    Ok(TrainedModel::new(
        subset.to_vec(),
        seed,
        ModelParams::RandomForest(RandomForestParams {
            n_trees: config.n_trees,
            features_per_split,
            bootstrap: config.bootstrap,
            trees,
        }),
    ))
}

/// Majority vote; a strict majority is required for the phishing verdict,
/// so vote ties resolve to legitimate.
pub(super) fn predict_forest(params: &RandomForestParams, values: &[usize]) -> Label {
    let phish_votes = params
        .trees
        .iter()
        .filter(|tree| super::tree::predict_tree(tree, values) == Label::Phishing)
        .count();
    if phish_votes * 2 > params.trees.len() {
        Label::Phishing
    } else {
        Label::Legitimate
    }
}
