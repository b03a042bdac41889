//! Exhaustive evaluation of every non-empty feature subset with every
//! requested classifier.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::eval::Protocol;
use super::metrics::MetricsReport;
use super::{mix_seed, LearnError, ModelKind};
use crate::encode::{Dataset, FeatureName, FEATURE_ORDER};

/// One subset's results across all evaluated classifiers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub subset: Vec<FeatureName>,
    pub best_model: ModelKind,
    pub best_accuracy: f64,
    /// Keyed by model code.
    pub per_model: BTreeMap<String, MetricsReport>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub protocol: Protocol,
    pub seed: u64,
    pub kinds: Vec<ModelKind>,
    pub rows: Vec<SweepRow>,
}

/// All 31 non-empty subsets of the five features, ordered by size and then
/// lexicographically by feature names (which stay in canonical column order
/// inside each subset).
pub fn enumerate_subsets() -> Vec<Vec<FeatureName>> {
    let mut subsets: Vec<Vec<FeatureName>> = (1u32..32)
        .map(|mask| {
            FEATURE_ORDER
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, f)| *f)
                .collect()
        })
        .collect();
    subsets.sort_by_key(|subset| {
        (
            subset.len(),
            subset.iter().map(|f| f.short_name()).collect::<Vec<&str>>(),
        )
    });
    subsets
}

/// Evaluates every classifier kind on every subset. Each (subset, kind)
/// cell derives its own seed, so the report is identical no matter how or
/// in what order the cells are computed. The best model per subset is the
/// accuracy argmax, ties broken by model code.
pub fn sweep_combinations(
    ds: &Dataset,
    kinds: &[ModelKind],
    protocol: Protocol,
    seed: u64,
) -> Result<SweepReport, LearnError> {
    let mut unique_kinds: Vec<ModelKind> = Vec::new();
    for &k in kinds {
        if !unique_kinds.contains(&k) {
            unique_kinds.push(k);
        }
    }
    if unique_kinds.is_empty() {
        return Err(LearnError::EmptyDataset);
    }

    let mut rows = Vec::new();
    for (subset_idx, subset) in enumerate_subsets().into_iter().enumerate() {
        let mut per_model = BTreeMap::new();
        for &kind in &unique_kinds {
            let cell_seed = mix_seed(seed, &[subset_idx as u64, kind_id(kind)]);
            let report = protocol.evaluate(ds, kind, &subset, cell_seed)?;
            per_model.insert(kind.code().to_string(), report);
        }
        let (best_code, best_report) = per_model
            .iter()
            .max_by(|(code_a, a), (code_b, b)| {
                a.accuracy
                    .partial_cmp(&b.accuracy)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then_with(|| code_b.cmp(code_a))
            })
            .expect("at least one kind evaluated");
        rows.push(SweepRow {
            subset,
            best_model: ModelKind::parse(best_code).expect("codes round trip"),
            best_accuracy: best_report.accuracy,
            per_model,
        });
    }
    Ok(SweepReport {
        protocol,
        seed,
        kinds: unique_kinds,
        rows,
    })
}

fn kind_id(kind: ModelKind) -> u64 {
    match kind {
        ModelKind::NaiveBayes => 1,
        ModelKind::DecisionTree => 2,
        ModelKind::RandomForest => 3,
    }
}

pub fn subset_label(subset: &[FeatureName]) -> String {
    subset
        .iter()
        .map(|f| f.short_name())
        .collect::<Vec<_>>()
        .join("+")
}

impl SweepReport {
    /// CSV rendering: one line per (subset, model) pair.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "n_features,subset,model,tpr,fpr,precision,recall,f_measure,accuracy,train_s,predict_s,is_best\n",
        );
        for row in &self.rows {
            for kind in &self.kinds {
                let m = &row.per_model[kind.code()];
                let is_best = *kind == row.best_model;
                writeln!(
                    out,
                    "{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{}",
                    row.subset.len(),
                    subset_label(&row.subset),
                    kind.code(),
                    m.tpr,
                    m.fpr,
                    m.precision,
                    m.recall,
                    m.f_measure,
                    m.accuracy,
                    m.train_time,
                    m.predict_time,
                    is_best
                )
                .expect("writing to a String cannot fail");
            }
        }
        out
    }

    /// Serialization of everything reproducible: wall-clock timings are
    /// zeroed out, every other field is seed-determined.
    pub fn canonical_json(&self) -> String {
        let mut clone = self.clone();
        for row in &mut clone.rows {
            for report in row.per_model.values_mut() {
                report.train_time = 0.0;
                report.predict_time = 0.0;
            }
        }
        serde_json::to_string_pretty(&clone).expect("report serializes")
    }
}
