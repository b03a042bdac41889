//! Classifiers, evaluation protocols and the feature-combination sweep.
//!
//! Three classifiers run over the ternary features: categorical naive
//! Bayes, a multiway decision tree and a bagged random forest. Evaluation
//! offers stratified k-fold cross-validation (metrics pooled over folds)
//! and a stratified holdout split, and the sweep evaluates every non-empty
//! feature subset with every classifier.
//!
//! Everything is deterministic for a fixed seed: each training/evaluation
//! cell derives its own RNG stream, so results do not depend on execution
//! order. Ties — leaf labels, forest votes, naive Bayes posteriors — always
//! resolve to the legitimate class, treating a tie as non-evidence.

mod eval;
mod forest;
mod metrics;
mod naive_bayes;
mod sweep;
mod tree;

pub use eval::{cross_validate, holdout_evaluate, make_folds, Protocol};
pub use forest::{train_random_forest, ForestConfig};
pub use metrics::{compute_metrics, ConfusionCounts, MetricsReport};
pub use naive_bayes::{train_naive_bayes, NaiveBayesParams};
pub use sweep::{enumerate_subsets, subset_label, sweep_combinations, SweepReport, SweepRow};
pub use tree::{train_decision_tree, SplitCriterion, TreeConfig, TreeNode};

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encode::{Dataset, FeatureName, FeatureVector, Label, Ternary};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("feature subset is empty")]
    EmptySubset,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dataset contains a single class; training requires both")]
    OneClassDataset,
    #[error("dataset contains unlabeled records")]
    UnlabeledRecord,
    #[error("fold count must be at least 2, got {0}")]
    BadK(usize),
    #[error("fold count {k} exceeds the {n} available records")]
    KTooLarge { k: usize, n: usize },
    #[error("class {class} has {count} records, fewer than the {k} folds")]
    ClassTooSmall { class: char, count: usize, k: usize },
    #[error("train fraction must be in (0, 1), got {0}")]
    BadFraction(f64),
    #[error("a class is absent from the training part of the split")]
    ClassMissingFromTrain,
    #[error("confusion counts are all zero")]
    EmptyConfusion,
    #[error("unsupported model format version {found}, expected {expected}")]
    VersionError { found: u32, expected: u32 },
    #[error("malformed model file {path}: {detail}")]
    MalformedModel { path: String, detail: String },
    #[error("I/O failure on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Classifier family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum ModelKind {
    NaiveBayes,
    DecisionTree,
    RandomForest,
}

impl ModelKind {
    pub fn code(self) -> &'static str {
        match self {
            ModelKind::NaiveBayes => "nb",
            ModelKind::DecisionTree => "dt",
            ModelKind::RandomForest => "rf",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "nb" | "naivebayes" | "naive_bayes" => Some(ModelKind::NaiveBayes),
            "dt" | "decisiontree" | "decision_tree" => Some(ModelKind::DecisionTree),
            "rf" | "randomforest" | "random_forest" => Some(ModelKind::RandomForest),
            _ => None,
        }
    }

    pub const ALL: [ModelKind; 3] = [
        ModelKind::NaiveBayes,
        ModelKind::DecisionTree,
        ModelKind::RandomForest,
    ];
}

impl From<ModelKind> for String {
    fn from(k: ModelKind) -> String {
        k.code().to_string()
    }
}

impl TryFrom<String> for ModelKind {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        ModelKind::parse(&s).ok_or_else(|| format!("unknown model kind: {s:?}"))
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

/// Learned state per classifier family.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelParams {
    NaiveBayes(naive_bayes::NaiveBayesParams),
    DecisionTree(tree::DecisionTreeParams),
    RandomForest(forest::RandomForestParams),
}

impl ModelParams {
    fn kind(&self) -> ModelKind {
        match self {
            ModelParams::NaiveBayes(_) => ModelKind::NaiveBayes,
            ModelParams::DecisionTree(_) => ModelKind::DecisionTree,
            ModelParams::RandomForest(_) => ModelKind::RandomForest,
        }
    }
}

/// A trained classifier bound to the feature subset it consumes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub kind: ModelKind,
    pub feature_subset: Vec<FeatureName>,
    pub seed: u64,
    pub params: ModelParams,
}

impl TrainedModel {
    pub(crate) fn new(feature_subset: Vec<FeatureName>, seed: u64, params: ModelParams) -> Self {
        TrainedModel {
            format_version: MODEL_FORMAT_VERSION,
            kind: params.kind(),
            feature_subset,
            seed,
            params,
        }
    }

    /// Short content-derived identifier for reports.
    pub fn id(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_string(self).expect("model serializes");
        let digest = Sha256::digest(json.as_bytes());
        let hex: String = digest[..6].iter().map(|b| format!("{b:02x}")).collect();
        format!("{}-{}", self.kind.code(), hex)
    }
}

/// Classifies one feature vector. Decision paths that reach a branch never
/// seen in training fall back to that node's majority label.
pub fn predict(model: &TrainedModel, x: &FeatureVector) -> Label {
    let values: Vec<usize> = model
        .feature_subset
        .iter()
        .map(|f| x.get(*f).index())
        .collect();
    predict_values(model, &values)
}

pub(crate) fn predict_values(model: &TrainedModel, values: &[usize]) -> Label {
    match &model.params {
        ModelParams::NaiveBayes(p) => naive_bayes::predict_nb(p, values),
        ModelParams::DecisionTree(p) => tree::predict_tree(&p.root, values),
        ModelParams::RandomForest(p) => forest::predict_forest(p, values),
    }
}

/// Trains `kind` with its default hyperparameters.
pub fn train_model(
    ds: &Dataset,
    kind: ModelKind,
    subset: &[FeatureName],
    seed: u64,
) -> Result<TrainedModel, LearnError> {
    match kind {
        ModelKind::NaiveBayes => train_naive_bayes(ds, subset, 1.0),
        ModelKind::DecisionTree => train_decision_tree(ds, subset, &TreeConfig::default()),
        ModelKind::RandomForest => train_random_forest(ds, subset, &ForestConfig::default(), seed),
    }
}

pub fn save_model(model: &TrainedModel, path: impl AsRef<Path>) -> Result<(), LearnError> {
    let path = path.as_ref();
    let json = serde_json::to_string_pretty(model).expect("model serializes");
    std::fs::write(path, json).map_err(|source| LearnError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TrainedModel, LearnError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| LearnError::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_model_from_str(&text, &path.display().to_string())
}

pub fn load_model_from_str(text: &str, origin: &str) -> Result<TrainedModel, LearnError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| LearnError::MalformedModel {
            path: origin.to_string(),
            detail: e.to_string(),
        })?;
    let found = value
        .get("format_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| LearnError::MalformedModel {
            path: origin.to_string(),
            detail: "missing format_version".to_string(),
        })? as u32;
    if found != MODEL_FORMAT_VERSION {
        return Err(LearnError::VersionError {
            found,
            expected: MODEL_FORMAT_VERSION,
        });
    }
    let model: TrainedModel =
        serde_json::from_value(value).map_err(|e| LearnError::MalformedModel {
            path: origin.to_string(),
            detail: e.to_string(),
        })?;
    if model.kind != model.params.kind() {
        return Err(LearnError::MalformedModel {
            path: origin.to_string(),
            detail: format!(
                "declared kind {} does not match stored {} parameters",
                model.kind,
                model.params.kind()
            ),
        });
    }
    if model.feature_subset.is_empty() {
        return Err(LearnError::MalformedModel {
            path: origin.to_string(),
            detail: "empty feature subset".to_string(),
        });
    }
    Ok(model)
}

/// Validates a training dataset and extracts per-record subset value
/// indexes plus labels.
pub(crate) fn training_view(
    ds: &Dataset,
    subset: &[FeatureName],
) -> Result<(Vec<Vec<usize>>, Vec<Label>), LearnError> {
    if subset.is_empty() {
        return Err(LearnError::EmptySubset);
    }
    if ds.is_empty() {
        return Err(LearnError::EmptyDataset);
    }
    let mut labels = Vec::with_capacity(ds.len());
    for record in &ds.records {
        labels.push(record.label.ok_or(LearnError::UnlabeledRecord)?);
    }
    let counts = ds.class_counts();
    if counts[0] == 0 || counts[1] == 0 {
        return Err(LearnError::OneClassDataset);
    }
    let values = ds
        .records
        .iter()
        .map(|r| subset.iter().map(|f| r.get(*f).index()).collect())
        .collect();
    Ok((values, labels))
}

/// Stable seed derivation so parallel and serial runs agree.
pub(crate) fn mix_seed(base: u64, parts: &[u64]) -> u64 {
    fn splitmix64(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    let mut state = splitmix64(base);
    for &p in parts {
        state = splitmix64(state ^ splitmix64(p));
    }
    state
}

/// All 243 possible ternary inputs, for exhaustive prediction checks.
pub fn all_ternary_vectors() -> Vec<FeatureVector> {
    let mut out = Vec::with_capacity(243);
    for a in Ternary::ALL {
        for b in Ternary::ALL {
            for c in Ternary::ALL {
                for d in Ternary::ALL {
                    for e in Ternary::ALL {
                        out.push(FeatureVector::from_values(
                            [a, b, c, d, e],
                            None,
                            "enumeration://",
                        ));
                    }
                }
            }
        }
    }
    out
}
