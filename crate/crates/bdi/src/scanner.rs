//! End-to-end scanning: URL in, verdict out, with a per-feature
//! explanation of what was identified and how it matched.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domains::{parse_url_domain, DomainError, DomainParts, SuffixRules};
use crate::encode::{encode_feature, encode_vector, FeatureVector, Label, Ternary, FEATURE_ORDER};
use crate::extract::{extract_all, IdentifiedDomains};
use crate::learn::{predict, TrainedModel};
use crate::snapshot::{fetch_snapshot, load_snapshot, FetchPolicy, PageSnapshot, SnapshotError};

/// A classifier trained on the synthetic generator, committed with the
/// crate so scanning works out of the box. It is a demo model, not a
/// production-calibrated one.
const DEMO_MODEL_JSON: &str = include_str!("../data/demo_model.json");

#[derive(Debug, Error)]
pub enum ScanError {
    #[error("scan failed at {stage}: {message}")]
    ScanFailed { stage: String, message: String },
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
    #[error("could not derive the page's own domain: {0}")]
    Domain(#[from] DomainError),
}

/// What one feature contributed to the verdict.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureEvidence {
    pub identified: Option<String>,
    pub code: Ternary,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanResult {
    pub url: String,
    pub parts: DomainParts,
    pub identified: IdentifiedDomains,
    pub vector: FeatureVector,
    pub verdict: Label,
    pub per_feature_explanation: BTreeMap<String, FeatureEvidence>,
    /// Set when at least three features are absent — the same threshold the
    /// dataset inclusion rule uses — so callers know the verdict rests on
    /// thin evidence.
    pub insufficient_evidence: bool,
    pub model_id: String,
    pub elapsed: f64,
}

/// The bundled demo model.
pub fn demo_model() -> TrainedModel {
    crate::learn::load_model_from_str(DEMO_MODEL_JSON, "bundled demo model")
        .expect("bundled demo model parses")
}

fn classify_snapshot(
    snap: &PageSnapshot,
    model: &TrainedModel,
    rules: &SuffixRules,
    logo_keywords: &[String],
    requested_url: &str,
    started: Instant,
) -> Result<ScanResult, ScanError> {
    // The claimed domain is where the user actually lands, after redirects.
    let parts = parse_url_domain(&snap.final_url, rules)?;
    let identified = extract_all(snap, rules, logo_keywords);
    let vector = encode_vector(&identified, &parts, None, requested_url);
    let verdict = predict(model, &vector);

    let mut per_feature_explanation = BTreeMap::new();
    for feature in FEATURE_ORDER {
        per_feature_explanation.insert(
            feature.short_name().to_string(),
            FeatureEvidence {
                identified: identified.get(feature).map(str::to_string),
                code: encode_feature(identified.get(feature), &parts),
            },
        );
    }
    let absent = vector
        .values()
        .iter()
        .filter(|v| **v == Ternary::Absent)
        .count();

    Ok(ScanResult {
        url: requested_url.to_string(),
        parts,
        identified,
        vector,
        verdict,
        per_feature_explanation,
        insufficient_evidence: absent >= 3,
        model_id: model.id(),
        elapsed: started.elapsed().as_secs_f64(),
    })
}

/// Fetches `url` and runs the whole pipeline. Partial acquisition failures
/// proceed with absent evidence; only a total fetch failure aborts.
pub fn scan(
    url: &str,
    model: &TrainedModel,
    policy: &FetchPolicy,
    rules: &SuffixRules,
) -> Result<ScanResult, ScanError> {
    scan_with_keywords(url, model, policy, rules, &[])
}

pub fn scan_with_keywords(
    url: &str,
    model: &TrainedModel,
    policy: &FetchPolicy,
    rules: &SuffixRules,
    logo_keywords: &[String],
) -> Result<ScanResult, ScanError> {
    let started = Instant::now();
    let snap = fetch_snapshot(url, policy).map_err(|e| ScanError::ScanFailed {
        stage: e.stage().to_string(),
        message: e.to_string(),
    })?;
    classify_snapshot(&snap, model, rules, logo_keywords, url, started)
}

/// Same pipeline over a stored snapshot; deterministic apart from
/// `elapsed`.
pub fn scan_offline(
    path: impl AsRef<Path>,
    model: &TrainedModel,
    rules: &SuffixRules,
) -> Result<ScanResult, ScanError> {
    let started = Instant::now();
    let snap = load_snapshot(path)?;
    classify_snapshot(&snap, model, rules, &[], &snap.requested_url, started)
}

/// Scans an already-loaded snapshot.
pub fn scan_snapshot(
    snap: &PageSnapshot,
    model: &TrainedModel,
    rules: &SuffixRules,
) -> Result<ScanResult, ScanError> {
    classify_snapshot(snap, model, rules, &[], &snap.requested_url, Instant::now())
}
