//! Filter-method attribute ranking: correlation, information gain, gain
//! ratio and ReliefF over the five ternary features.
//!
//! Scores are reported on each evaluator's native scale — the scales are
//! not comparable across evaluators, the produced ORDER is. Features are
//! treated as categorical everywhere except correlation, which reads the
//! ternary codes as reals.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encode::{Dataset, Ternary, FEATURE_ORDER};

#[derive(Debug, Error)]
pub enum SelectError {
    #[error("need at least 2 records, got {0}")]
    TooFewRecords(usize),
    #[error("dataset contains a single class; ranking requires both")]
    OneClassDataset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Evaluator {
    Correlation,
    InfoGain,
    GainRatio,
    ReliefF,
}

impl Evaluator {
    pub fn name(self) -> &'static str {
        match self {
            Evaluator::Correlation => "correlation",
            Evaluator::InfoGain => "info_gain",
            Evaluator::GainRatio => "gain_ratio",
            Evaluator::ReliefF => "relieff",
        }
    }
}

/// Scores for all five features under one evaluator, plus the descending
/// score order (ties broken by feature name).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureRanking {
    pub evaluator: Evaluator,
    pub scores: BTreeMap<String, f64>,
    pub order: Vec<String>,
}

impl FeatureRanking {
    fn from_scores(evaluator: Evaluator, raw: [f64; 5]) -> Self {
        let mut scores = BTreeMap::new();
        for (feature, score) in FEATURE_ORDER.iter().zip(raw) {
            scores.insert(feature.short_name().to_string(), score);
        }
        let mut order: Vec<String> = scores.keys().cloned().collect();
        order.sort_by(|a, b| {
            scores[b]
                .partial_cmp(&scores[a])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.cmp(b))
        });
        FeatureRanking {
            evaluator,
            scores,
            order,
        }
    }

    pub fn score_of(&self, short_name: &str) -> f64 {
        self.scores[short_name]
    }
}

fn check_preconditions(ds: &Dataset) -> Result<(), SelectError> {
    if ds.len() < 2 {
        return Err(SelectError::TooFewRecords(ds.len()));
    }
    let counts = ds.class_counts();
    if counts[0] == 0 || counts[1] == 0 {
        return Err(SelectError::OneClassDataset);
    }
    Ok(())
}

/// Feature columns as dense value indexes (0,1,2 for codes -1,0,1) plus the
/// class column (0 legitimate, 1 phishing).
fn columns(ds: &Dataset) -> (Vec<[usize; 5]>, Vec<usize>) {
    let mut features = Vec::with_capacity(ds.len());
    let mut classes = Vec::with_capacity(ds.len());
    for record in &ds.records {
        features.push(record.values().map(Ternary::index));
        classes.push(record.label.expect("datasets are labeled").index());
    }
    (features, classes)
}

/// |Pearson correlation| between each feature column (codes as reals) and
/// the class encoded 0/1. Zero-variance feature columns score 0.
pub fn correlation_scores(ds: &Dataset) -> Result<FeatureRanking, SelectError> {
    check_preconditions(ds)?;
    let n = ds.len() as f64;
    let (features, classes) = columns(ds);
    let class_vals: Vec<f64> = classes.iter().map(|&c| c as f64).collect();
    let class_mean = class_vals.iter().sum::<f64>() / n;

    let mut raw = [0.0f64; 5];
    for (fi, slot) in raw.iter_mut().enumerate() {
        let vals: Vec<f64> = features.iter().map(|row| row[fi] as f64 - 1.0).collect();
        let mean = vals.iter().sum::<f64>() / n;
        let mut cov = 0.0;
        let mut var_x = 0.0;
        let mut var_y = 0.0;
        for (x, y) in vals.iter().zip(&class_vals) {
            cov += (x - mean) * (y - class_mean);
            var_x += (x - mean) * (x - mean);
            var_y += (y - class_mean) * (y - class_mean);
        }
        if var_x == 0.0 || var_y == 0.0 {
            log::debug!("feature column {fi} has zero variance; correlation set to 0");
            *slot = 0.0;
        } else {
            *slot = (cov / (var_x.sqrt() * var_y.sqrt())).abs();
        }
    }
    Ok(FeatureRanking::from_scores(Evaluator::Correlation, raw))
}

/// Shannon entropy (base 2) of a count table.
fn entropy(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let total = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.log2()
        })
        .sum()
}

/// Per-feature contingency tables: `[value][class]` counts.
fn contingency(ds: &Dataset) -> [[[usize; 2]; 3]; 5] {
    let mut tables = [[[0usize; 2]; 3]; 5];
    for record in &ds.records {
        let class = record.label.expect("datasets are labeled").index();
        for (fi, value) in record.values().iter().enumerate() {
            tables[fi][value.index()][class] += 1;
        }
    }
    tables
}

fn info_gain_of(table: &[[usize; 2]; 3], class_counts: &[usize; 2]) -> f64 {
    let n: usize = class_counts.iter().sum();
    let class_entropy = entropy(class_counts);
    let mut conditional = 0.0;
    for value_row in table {
        let nv: usize = value_row.iter().sum();
        if nv > 0 {
            conditional += (nv as f64 / n as f64) * entropy(value_row);
        }
    }
    class_entropy - conditional
}

fn split_info_of(table: &[[usize; 2]; 3]) -> f64 {
    let value_counts: Vec<usize> = table.iter().map(|row| row.iter().sum()).collect();
    entropy(&value_counts)
}

/// Information gain of the class given each feature, base-2 entropy over
/// the categorical values {-1, 0, 1}.
pub fn info_gain_scores(ds: &Dataset) -> Result<FeatureRanking, SelectError> {
    check_preconditions(ds)?;
    let tables = contingency(ds);
    let class_counts = {
        let c = ds.class_counts();
        [c[0], c[1]]
    };
    let mut raw = [0.0f64; 5];
    for (slot, table) in raw.iter_mut().zip(&tables) {
        *slot = info_gain_of(table, &class_counts);
    }
    Ok(FeatureRanking::from_scores(Evaluator::InfoGain, raw))
}

/// Gain ratio: information gain normalized by the feature's split
/// information; 0 when the split information is 0 (single-valued feature).
pub fn gain_ratio_scores(ds: &Dataset) -> Result<FeatureRanking, SelectError> {
    check_preconditions(ds)?;
    let tables = contingency(ds);
    let class_counts = {
        let c = ds.class_counts();
        [c[0], c[1]]
    };
    let mut raw = [0.0f64; 5];
    for (slot, table) in raw.iter_mut().zip(&tables) {
        let split = split_info_of(table);
        *slot = if split == 0.0 {
            0.0
        } else {
            info_gain_of(table, &class_counts) / split
        };
    }
    Ok(FeatureRanking::from_scores(Evaluator::GainRatio, raw))
}

/// How many records to sample for ReliefF.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReliefSample {
    All,
    Count(usize),
}

/// ReliefF for categorical attributes.
///
/// For each sampled record, the k nearest hits (same class) and k nearest
/// misses per other class are found under the overlap distance on the five
/// features; equal values contribute 0 to a feature's update and unequal
/// values 1, with miss contributions weighted by class prior. Neighbor
/// counts are clamped per class when a class is small, and neighbor ties
/// break by record index, so results are reproducible for a fixed seed.
pub fn relieff_scores(
    ds: &Dataset,
    neighbors_k: usize,
    sample: ReliefSample,
    seed: u64,
) -> Result<FeatureRanking, SelectError> {
    check_preconditions(ds)?;
    let (features, classes) = columns(ds);
    let n = features.len();
    let class_counts = ds.class_counts();
    let priors = [
        class_counts[0] as f64 / n as f64,
        class_counts[1] as f64 / n as f64,
    ];

    let sampled: Vec<usize> = match sample {
        ReliefSample::All => (0..n).collect(),
        ReliefSample::Count(m) if m >= n => (0..n).collect(),
        ReliefSample::Count(m) => {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            rand::seq::index::sample(&mut rng, n, m).into_vec()
        }
    };
    let m = sampled.len() as f64;

    let mut weights = [0.0f64; 5];
    for &ri in &sampled {
        let own_class = classes[ri];
        // Distances to every other record, stable by index.
        let mut by_class: [Vec<(usize, usize)>; 2] = [Vec::new(), Vec::new()];
        for j in 0..n {
            if j == ri {
                continue;
            }
            let dist = features[ri]
                .iter()
                .zip(&features[j])
                .filter(|(a, b)| a != b)
                .count();
            by_class[classes[j]].push((dist, j));
        }
        for list in &mut by_class {
            list.sort();
        }

        let hits = &by_class[own_class];
        let k_hit = neighbors_k.min(hits.len());
        let miss_class = 1 - own_class;
        let misses = &by_class[miss_class];
        let k_miss = neighbors_k.min(misses.len());
        let miss_weight = priors[miss_class] / (1.0 - priors[own_class]);

        for (fi, weight) in weights.iter_mut().enumerate() {
            if k_hit > 0 {
                let hit_diffs: f64 = hits[..k_hit]
                    .iter()
                    .map(|&(_, j)| (features[ri][fi] != features[j][fi]) as usize as f64)
                    .sum();
                *weight -= hit_diffs / (k_hit as f64 * m);
            }
            if k_miss > 0 {
                let miss_diffs: f64 = misses[..k_miss]
                    .iter()
                    .map(|&(_, j)| (features[ri][fi] != features[j][fi]) as usize as f64)
                    .sum();
                *weight += miss_weight * miss_diffs / (k_miss as f64 * m);
            }
        }
    }
    Ok(FeatureRanking::from_scores(Evaluator::ReliefF, weights))
}

pub const DEFAULT_RELIEFF_NEIGHBORS: usize = 10;

/// Runs all four evaluators with their defaults and returns the rankings in
/// a fixed order.
pub fn rank_report(ds: &Dataset) -> Result<Vec<FeatureRanking>, SelectError> {
    rank_report_with(ds, DEFAULT_RELIEFF_NEIGHBORS, 0)
}

pub fn rank_report_with(
    ds: &Dataset,
    relieff_k: usize,
    seed: u64,
) -> Result<Vec<FeatureRanking>, SelectError> {
    Ok(vec![
        correlation_scores(ds)?,
        info_gain_scores(ds)?,
        gain_ratio_scores(ds)?,
        relieff_scores(ds, relieff_k, ReliefSample::All, seed)?,
    ])
}
