//! Evaluation protocols: stratified k-fold cross-validation with pooled
//! confusion counts, and a stratified holdout split.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::{compute_metrics, ConfusionCounts, MetricsReport};
use super::{mix_seed, predict, train_model, LearnError, ModelKind};
use crate::encode::{Dataset, FeatureName, Label};

/// Evaluation protocol selector, parseable from CLI strings like `cv10`
/// and `holdout80`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "protocol", rename_all = "snake_case")]
pub enum Protocol {
    Cv { k: usize },
    Holdout { train_fraction: f64 },
}

impl Protocol {
    pub fn parse(s: &str) -> Option<Protocol> {
        let s = s.trim().to_ascii_lowercase();
        if let Some(k) = s.strip_prefix("cv") {
            return k.parse().ok().map(|k| Protocol::Cv { k });
        }
        if let Some(pct) = s.strip_prefix("holdout") {
            let pct: f64 = pct.parse().ok()?;
            return Some(Protocol::Holdout {
                train_fraction: pct / 100.0,
            });
        }
        None
    }

    pub fn evaluate(
        &self,
        ds: &Dataset,
        kind: ModelKind,
        subset: &[FeatureName],
        seed: u64,
    ) -> Result<MetricsReport, LearnError> {
        match *self {
            Protocol::Cv { k } => cross_validate(ds, kind, subset, k, true, seed),
            Protocol::Holdout { train_fraction } => {
                holdout_evaluate(ds, kind, subset, train_fraction, true, seed)
            }
        }
    }
}

impl std::fmt::Display for Protocol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Protocol::Cv { k } => write!(f, "cv{k}"),
            Protocol::Holdout { train_fraction } => {
                write!(f, "holdout{}", (train_fraction * 100.0).round() as u64)
            }
        }
    }
}

fn labels_of(ds: &Dataset) -> Result<Vec<Label>, LearnError> {
    ds.records
        .iter()
        .map(|r| r.label.ok_or(LearnError::UnlabeledRecord))
        .collect()
}

/// Partitions record indexes into `k` folds of sizes within one of each
/// other. With stratification, each class is dealt onto a fold cursor that
/// continues across classes, keeping both the per-class and the overall
/// fold sizes balanced.
pub fn make_folds(labels: &[Label], k: usize, stratified: bool, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    if stratified {
        let mut cursor = 0usize;
        for class in Label::ALL {
            let mut members: Vec<usize> =
                (0..labels.len()).filter(|&i| labels[i] == class).collect();
            members.shuffle(&mut rng);
            for idx in members {
                folds[cursor % k].push(idx);
                cursor += 1;
            }
        }
    } else {
        let mut order: Vec<usize> = (0..labels.len()).collect();
        order.shuffle(&mut rng);
        for (i, idx) in order.into_iter().enumerate() {
            folds[i % k].push(idx);
        }
    }
    folds
}

fn sub_dataset(ds: &Dataset, indexes: &[usize]) -> Dataset {
    Dataset {
        records: indexes.iter().map(|&i| ds.records[i].clone()).collect(),
        feature_names: ds.feature_names,
        provenance: String::new(),
    }
}

/// k-fold cross-validation. Each fold is held out once; the reported
/// metrics come from the confusion counts pooled over all folds, and the
/// times are the mean per-fold wall-clock costs.
pub fn cross_validate(
    ds: &Dataset,
    kind: ModelKind,
    subset: &[FeatureName],
    k: usize,
    stratified: bool,
    seed: u64,
) -> Result<MetricsReport, LearnError> {
    if k < 2 {
        return Err(LearnError::BadK(k));
    }
    if k > ds.len() {
        return Err(LearnError::KTooLarge { k, n: ds.len() });
    }
    let labels = labels_of(ds)?;
    if stratified {
        let counts = ds.class_counts();
        for class in Label::ALL {
            if counts[class.index()] < k {
                return Err(LearnError::ClassTooSmall {
                    class: class.code(),
                    count: counts[class.index()],
                    k,
                });
            }
        }
    }

    let folds = make_folds(&labels, k, stratified, mix_seed(seed, &[0x0f01]));
    let mut pooled = ConfusionCounts::default();
    let mut train_time = 0.0;
    let mut predict_time = 0.0;
    for (fold_idx, test) in folds.iter().enumerate() {
        let train: Vec<usize> = folds
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != fold_idx)
            .flat_map(|(_, f)| f.iter().copied())
            .collect();
        let train_ds = sub_dataset(ds, &train);

        let t0 = Instant::now();
        let model = train_model(
            &train_ds,
            kind,
            subset,
            mix_seed(seed, &[fold_idx as u64, 1]),
        )?;
        train_time += t0.elapsed().as_secs_f64();

        let t1 = Instant::now();
        for &i in test {
            pooled.record(labels[i], predict(&model, &ds.records[i]));
        }
        predict_time += t1.elapsed().as_secs_f64();
    }

    let mut report = compute_metrics(&pooled)?;
    report.train_time = train_time / k as f64;
    report.predict_time = predict_time / k as f64;
    Ok(report)
}

/// Stratified shuffle split: per class, `round(count * train_fraction)`
/// records (at least one) go to the training side.
pub fn holdout_evaluate(
    ds: &Dataset,
    kind: ModelKind,
    subset: &[FeatureName],
    train_fraction: f64,
    stratified: bool,
    seed: u64,
) -> Result<MetricsReport, LearnError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(LearnError::BadFraction(train_fraction));
    }
    let labels = labels_of(ds)?;
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, &[0x0f02]));
    let mut train = Vec::new();
    let mut test = Vec::new();
    if stratified {
        for class in Label::ALL {
            let mut members: Vec<usize> =
                (0..labels.len()).filter(|&i| labels[i] == class).collect();
            members.shuffle(&mut rng);
            let n_train = ((members.len() as f64 * train_fraction).round() as usize)
                .clamp(1.min(members.len()), members.len());
            train.extend_from_slice(&members[..n_train]);
            test.extend_from_slice(&members[n_train..]);
        }
    } else {
        let mut order: Vec<usize> = (0..labels.len()).collect();
        order.shuffle(&mut rng);
        let n_train = (order.len() as f64 * train_fraction).round() as usize;
        train = order[..n_train].to_vec();
        test = order[n_train..].to_vec();
    }

    let train_classes: std::collections::HashSet<Label> =
        train.iter().map(|&i| labels[i]).collect();
    if train_classes.len() < 2 {
        return Err(LearnError::ClassMissingFromTrain);
    }

    let train_ds = sub_dataset(ds, &train);
    let t0 = Instant::now();
    let model = train_model(&train_ds, kind, subset, mix_seed(seed, &[0, 2]))?;
    let train_time = t0.elapsed().as_secs_f64();

    let mut counts = ConfusionCounts::default();
    let t1 = Instant::now();
    for &i in &test {
        counts.record(labels[i], predict(&model, &ds.records[i]));
    }
    let predict_time = t1.elapsed().as_secs_f64();

    let mut report = compute_metrics(&counts)?;
    report.train_time = train_time;
    report.predict_time = predict_time;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encode::{build_dataset, FeatureVector, Ternary, FEATURE_ORDER};

    use Label::{Legitimate as F, Phishing as T};

    fn separable_dataset(n_per_class: usize) -> Dataset {
        let mut rows = Vec::new();
        for i in 0..n_per_class {
            rows.push(FeatureVector::from_values(
                [Ternary::Match; 5],
                Some(F),
                &format!("legit://{i}"),
            ));
            rows.push(FeatureVector::from_values(
                [Ternary::Mismatch; 5],
                Some(T),
                &format!("phish://{i}"),
            ));
        }
        build_dataset(rows, 0).unwrap()
    }

    #[test]
    fn folds_partition_the_dataset() {
        let labels: Vec<Label> = (0..23).map(|i| if i % 3 == 0 { T } else { F }).collect();
        for k in [2, 5, 10] {
            let folds = make_folds(&labels, k, true, 42);
            let mut seen: Vec<usize> = folds.iter().flatten().copied().collect();
            seen.sort();
            assert_eq!(seen, (0..labels.len()).collect::<Vec<_>>());
            let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
            let min = sizes.iter().min().unwrap();
            let max = sizes.iter().max().unwrap();
            assert!(max - min <= 1, "k={k}: {sizes:?}");
        }
    }

    #[test]
    fn leave_one_out_tests_every_record_once() {
        let labels: Vec<Label> = (0..9).map(|i| if i % 2 == 0 { T } else { F }).collect();
        let folds = make_folds(&labels, labels.len(), false, 0);
        assert!(folds.iter().all(|f| f.len() == 1));
    }

    #[test]
    fn separable_data_cross_validates_perfectly() {
        let ds = separable_dataset(20);
        for kind in ModelKind::ALL {
            let report = cross_validate(&ds, kind, &FEATURE_ORDER, 10, true, 1).unwrap();
            assert_eq!(report.accuracy, 1.0, "{kind}");
            assert_eq!(report.tpr, report.recall);
        }
    }

    #[test]
    fn k_larger_than_the_dataset_or_class_fails() {
        let ds = separable_dataset(3);
        assert!(matches!(
            cross_validate(&ds, ModelKind::NaiveBayes, &FEATURE_ORDER, 7, false, 0),
            Err(LearnError::KTooLarge { .. })
        ));
        assert!(matches!(
            cross_validate(&ds, ModelKind::NaiveBayes, &FEATURE_ORDER, 5, true, 0),
            Err(LearnError::ClassTooSmall { .. })
        ));
        assert!(matches!(
            cross_validate(&ds, ModelKind::NaiveBayes, &FEATURE_ORDER, 1, true, 0),
            Err(LearnError::BadK(1))
        ));
    }

    #[test]
    fn holdout_splits_eighty_twenty_stratified() {
        let ds = separable_dataset(50); // 100 records, 50/50
        let labels = labels_of(&ds).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut train_count = 0;
        for class in Label::ALL {
            let members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
            train_count += ((members.len() as f64 * 0.8).round()) as usize;
        }
        assert_eq!(train_count, 80);
        let _ = &mut rng;

        let report =
            holdout_evaluate(&ds, ModelKind::DecisionTree, &FEATURE_ORDER, 0.8, true, 3).unwrap();
        assert_eq!(report.accuracy, 1.0);
    }

    #[test]
    fn holdout_is_deterministic_for_a_seed() {
        let ds = crate::synth::generate(
            &crate::synth::SynthConfig {
                rows: 400,
                ..Default::default()
            },
            5,
        );
        let a =
            holdout_evaluate(&ds, ModelKind::RandomForest, &FEATURE_ORDER, 0.8, true, 9).unwrap();
        let b =
            holdout_evaluate(&ds, ModelKind::RandomForest, &FEATURE_ORDER, 0.8, true, 9).unwrap();
        assert_eq!(a.accuracy, b.accuracy);
        assert_eq!(a.tpr, b.tpr);
        assert_eq!(a.fpr, b.fpr);
    }

    #[test]
    fn bad_fractions_are_rejected() {
        let ds = separable_dataset(5);
        for f in [0.0, 1.0, -0.2, 1.5] {
            assert!(matches!(
                holdout_evaluate(&ds, ModelKind::NaiveBayes, &FEATURE_ORDER, f, true, 0),
                Err(LearnError::BadFraction(_))
            ));
        }
    }

    #[test]
    fn protocol_strings_parse() {
        assert_eq!(Protocol::parse("cv10"), Some(Protocol::Cv { k: 10 }));
        assert_eq!(Protocol::parse("CV5"), Some(Protocol::Cv { k: 5 }));
        assert_eq!(
            Protocol::parse("holdout80"),
            Some(Protocol::Holdout {
                train_fraction: 0.8
            })
        );
        assert_eq!(Protocol::parse("bogus"), None);
    }
}
