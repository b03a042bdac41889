//! Ternary feature encoding and labeled datasets.
//!
//! Each of the five identified domains is encoded against the page's own
//! domain as `1` (matches the full or root domain), `-1` (present but
//! mismatching) or `0` (evidence absent). Labeled vectors are collected
//! into datasets with an inclusion rule requiring a minimum number of
//! fetched (non-zero) features per record.

use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use percent_encoding::{percent_decode_str, utf8_percent_encode, AsciiSet, CONTROLS};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domains::{domains_match, DomainParts};
use crate::extract::IdentifiedDomains;

#[derive(Debug, Error)]
pub enum EncodeError {
    #[error("I/O failure on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("record {index} is unlabeled; datasets require labels")]
    UnlabeledRecord { index: usize },
    #[error("bad header: expected `{expected}`, found `{found}`")]
    SchemaError { expected: String, found: String },
    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
}

/// One ternary domain-match indicator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Ternary {
    Mismatch,
    Absent,
    Match,
}

impl Ternary {
    pub fn code(self) -> i8 {
        match self {
            Ternary::Mismatch => -1,
            Ternary::Absent => 0,
            Ternary::Match => 1,
        }
    }

    pub fn from_code(code: i8) -> Option<Self> {
        match code {
            -1 => Some(Ternary::Mismatch),
            0 => Some(Ternary::Absent),
            1 => Some(Ternary::Match),
            _ => None,
        }
    }

    /// All three values, in code order `[-1, 0, 1]`.
    pub const ALL: [Ternary; 3] = [Ternary::Mismatch, Ternary::Absent, Ternary::Match];

    /// Dense index in `0..3`, used by the learners for counting tables.
    pub fn index(self) -> usize {
        (self.code() + 1) as usize
    }
}

impl From<Ternary> for i8 {
    fn from(t: Ternary) -> i8 {
        t.code()
    }
}

impl TryFrom<i8> for Ternary {
    type Error = String;
    fn try_from(code: i8) -> Result<Self, Self::Error> {
        Ternary::from_code(code).ok_or_else(|| format!("ternary code out of range: {code}"))
    }
}

impl fmt::Display for Ternary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

/// Class label: `T` marks a phishing site, `F` a legitimate one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "char", try_from = "char")]
pub enum Label {
    Legitimate,
    Phishing,
}

impl Label {
    pub fn code(self) -> char {
        match self {
            Label::Phishing => 'T',
            Label::Legitimate => 'F',
        }
    }

    pub fn from_code(c: char) -> Option<Self> {
        match c {
            'T' => Some(Label::Phishing),
            'F' => Some(Label::Legitimate),
            _ => None,
        }
    }

    /// Index into two-element count arrays: legitimate first.
    pub fn index(self) -> usize {
        match self {
            Label::Legitimate => 0,
            Label::Phishing => 1,
        }
    }

    pub const ALL: [Label; 2] = [Label::Legitimate, Label::Phishing];
}

impl From<Label> for char {
    fn from(l: Label) -> char {
        l.code()
    }
}

impl TryFrom<char> for Label {
    type Error = String;
    fn try_from(c: char) -> Result<Self, Self::Error> {
        Label::from_code(c).ok_or_else(|| format!("label must be T or F, got {c:?}"))
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

/// The five tightly-bound domain features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum FeatureName {
    FormAction,
    Logo,
    CertCn,
    MostCommonLink,
    Cookie,
}

/// Canonical feature order; fixed so CSV columns and vector positions keep
/// stable semantics everywhere.
pub const FEATURE_ORDER: [FeatureName; 5] = [
    FeatureName::FormAction,
    FeatureName::Logo,
    FeatureName::CertCn,
    FeatureName::MostCommonLink,
    FeatureName::Cookie,
];

impl FeatureName {
    pub fn short_name(self) -> &'static str {
        match self {
            FeatureName::FormAction => "FAD",
            FeatureName::Logo => "LD",
            FeatureName::CertCn => "CN",
            FeatureName::MostCommonLink => "MCLD",
            FeatureName::Cookie => "CD",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "FAD" => Some(FeatureName::FormAction),
            "LD" => Some(FeatureName::Logo),
            "CN" => Some(FeatureName::CertCn),
            "MCLD" => Some(FeatureName::MostCommonLink),
            "CD" => Some(FeatureName::Cookie),
            _ => None,
        }
    }

    /// Position in [`FEATURE_ORDER`].
    pub fn position(self) -> usize {
        FEATURE_ORDER
            .iter()
            .position(|f| *f == self)
            .expect("feature is in canonical order")
    }
}

impl From<FeatureName> for String {
    fn from(f: FeatureName) -> String {
        f.short_name().to_string()
    }
}

impl TryFrom<String> for FeatureName {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        FeatureName::parse(&s).ok_or_else(|| format!("unknown feature name: {s:?}"))
    }
}

impl fmt::Display for FeatureName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.short_name())
    }
}

/// The five ternary indicators for one page, in canonical order, plus an
/// optional class label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub form_action: Ternary,
    pub logo: Ternary,
    pub cert_cn: Ternary,
    pub most_common_link: Ternary,
    pub cookie: Ternary,
    pub label: Option<Label>,
    pub source_url: String,
}

impl FeatureVector {
    pub fn get(&self, feature: FeatureName) -> Ternary {
        match feature {
            FeatureName::FormAction => self.form_action,
            FeatureName::Logo => self.logo,
            FeatureName::CertCn => self.cert_cn,
            FeatureName::MostCommonLink => self.most_common_link,
            FeatureName::Cookie => self.cookie,
        }
    }

    /// Values in canonical order.
    pub fn values(&self) -> [Ternary; 5] {
        [
            self.form_action,
            self.logo,
            self.cert_cn,
            self.most_common_link,
            self.cookie,
        ]
    }

    pub fn from_values(values: [Ternary; 5], label: Option<Label>, source_url: &str) -> Self {
        FeatureVector {
            form_action: values[0],
            logo: values[1],
            cert_cn: values[2],
            most_common_link: values[3],
            cookie: values[4],
            label,
            source_url: source_url.to_string(),
        }
    }

    /// Number of fetched (non-zero) features.
    pub fn present_count(&self) -> usize {
        self.values()
            .iter()
            .filter(|v| **v != Ternary::Absent)
            .count()
    }
}

/// An ordered collection of labeled feature vectors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dataset {
    pub records: Vec<FeatureVector>,
    pub feature_names: [FeatureName; 5],
    pub provenance: String,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Counts records per class, legitimate first.
    pub fn class_counts(&self) -> [usize; 2] {
        let mut counts = [0usize; 2];
        for r in &self.records {
            if let Some(label) = r.label {
                counts[label.index()] += 1;
            }
        }
        counts
    }
}

/// Encodes one identified domain against the page's parts: absent evidence
/// is `0`, a match is `1`, anything else is `-1`.
pub fn encode_feature(identified: Option<&str>, parts: &DomainParts) -> Ternary {
    match identified {
        None => Ternary::Absent,
        Some(candidate) if domains_match(candidate, parts) => Ternary::Match,
        Some(_) => Ternary::Mismatch,
    }
}

/// Applies [`encode_feature`] to all five identified domains.
pub fn encode_vector(
    ids: &IdentifiedDomains,
    parts: &DomainParts,
    label: Option<Label>,
    source_url: &str,
) -> FeatureVector {
    FeatureVector {
        form_action: encode_feature(ids.form_action.as_deref(), parts),
        logo: encode_feature(ids.logo.as_deref(), parts),
        cert_cn: encode_feature(ids.cert_cn.as_deref(), parts),
        most_common_link: encode_feature(ids.most_common_link.as_deref(), parts),
        cookie: encode_feature(ids.cookie.as_deref(), parts),
        label,
        source_url: source_url.to_string(),
    }
}

/// Builds a dataset from labeled rows, keeping only rows with at least
/// `min_present` fetched feature values. A mismatching value counts as
/// fetched; only absent (`0`) values do not.
pub fn build_dataset(rows: Vec<FeatureVector>, min_present: usize) -> Result<Dataset, EncodeError> {
    for (index, row) in rows.iter().enumerate() {
        if row.label.is_none() {
            return Err(EncodeError::UnlabeledRecord { index });
        }
    }
    let total = rows.len();
    let records: Vec<FeatureVector> = rows
        .into_iter()
        .filter(|r| r.present_count() >= min_present)
        .collect();
    if records.is_empty() && total > 0 {
        log::warn!("all {total} rows were dropped by the min_present={min_present} rule");
    }
    Ok(Dataset {
        records,
        feature_names: FEATURE_ORDER,
        provenance: format!("built with min_present={min_present} from {total} rows"),
    })
}

pub const CSV_HEADER: &str = "url,label,FAD,LD,CN,MCLD,CD";

/// Characters escaped in the URL column so rows never need quoting.
const URL_ESCAPES: &AsciiSet = &CONTROLS.add(b',').add(b'%').add(b'"');

/// Writes a dataset in the feature CSV format: UTF-8, LF line endings,
/// header `url,label,FAD,LD,CN,MCLD,CD`.
pub fn write_feature_csv_to(ds: &Dataset, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in &ds.records {
        let label = r.label.map(|l| l.code()).unwrap_or('F');
        let url = utf8_percent_encode(&r.source_url, URL_ESCAPES);
        let v = r.values();
        writeln!(
            out,
            "{url},{label},{},{},{},{},{}",
            v[0], v[1], v[2], v[3], v[4]
        )?;
    }
    Ok(())
}

pub fn write_feature_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<(), EncodeError> {
    let path = path.as_ref();
    let io_err = |source| EncodeError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io_err)?;
    write_feature_csv_to(ds, std::io::BufWriter::new(file)).map_err(io_err)
}

/// Reads a dataset from the feature CSV format, validating the header, the
/// seven-column arity, ternary feature codes and `T`/`F` labels.
pub fn read_feature_csv_from(reader: impl Read, provenance: &str) -> Result<Dataset, EncodeError> {
    let mut lines = BufReader::new(reader).lines().enumerate();
    let header = match lines.next() {
        Some((_, Ok(line))) => line,
        Some((_, Err(source))) => {
            return Err(EncodeError::Io {
                path: provenance.to_string(),
                source,
            })
        }
        None => String::new(),
    };
    if header.trim_end_matches('\r') != CSV_HEADER {
        return Err(EncodeError::SchemaError {
            expected: CSV_HEADER.to_string(),
            found: header,
        });
    }
    let mut records = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1; // 1-based, counting the header as line 1
        let line = line.map_err(|source| EncodeError::Io {
            path: provenance.to_string(),
            source,
        })?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(EncodeError::MalformedRow {
                line: line_no,
                reason: format!("expected 7 fields, found {}", fields.len()),
            });
        }
        let url = percent_decode_str(fields[0])
            .decode_utf8()
            .map_err(|e| EncodeError::MalformedRow {
                line: line_no,
                reason: format!("bad url encoding: {e}"),
            })?
            .to_string();
        let mut label_chars = fields[1].chars();
        let label = match (
            label_chars.next().and_then(Label::from_code),
            label_chars.next(),
        ) {
            (Some(label), None) => label,
            _ => {
                return Err(EncodeError::MalformedRow {
                    line: line_no,
                    reason: format!("label must be T or F, got {:?}", fields[1]),
                })
            }
        };
        let mut values = [Ternary::Absent; 5];
        for (slot, field) in values.iter_mut().zip(&fields[2..7]) {
            let code: i8 = field.parse().map_err(|_| EncodeError::MalformedRow {
                line: line_no,
                reason: format!("feature value {field:?} is not an integer"),
            })?;
            *slot = Ternary::from_code(code).ok_or_else(|| EncodeError::MalformedRow {
                line: line_no,
                reason: format!("feature value {code} outside {{-1,0,1}}"),
            })?;
        }
        records.push(FeatureVector::from_values(values, Some(label), &url));
    }
    Ok(Dataset {
        records,
        feature_names: FEATURE_ORDER,
        provenance: provenance.to_string(),
    })
}

pub fn read_feature_csv(path: impl AsRef<Path>) -> Result<Dataset, EncodeError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| EncodeError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_feature_csv_from(file, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::{parse_url_domain, SuffixRules};

    fn parts_of(url: &str) -> DomainParts {
        parse_url_domain(url, SuffixRules::bundled()).unwrap()
    }

    fn vector(values: [i8; 5], label: Option<Label>) -> FeatureVector {
        let values = values.map(|c| Ternary::from_code(c).unwrap());
        FeatureVector::from_values(values, label, "https://example.com/")
    }

    #[test]
    fn matches_encode_to_one() {
        let parts = parts_of("https://www.facebook.com/");
        assert_eq!(encode_feature(Some("facebook.com"), &parts), Ternary::Match);
    }

    #[test]
    fn mismatches_encode_to_minus_one() {
        let parts = parts_of("https://www.facebook.com/");
        assert_eq!(
            encode_feature(Some("github-facebook.com"), &parts),
            Ternary::Mismatch
        );
    }

    #[test]
    fn absent_evidence_encodes_to_zero() {
        let parts = parts_of("https://www.facebook.com/");
        assert_eq!(encode_feature(None, &parts), Ternary::Absent);
    }

    #[test]
    fn encode_feature_image_is_exactly_ternary() {
        for parts in [
            parts_of("https://www.facebook.com/"),
            parts_of("http://192.168.0.1/"),
            parts_of("sub.example.co.uk"),
        ] {
            let outcomes = [
                encode_feature(None, &parts),
                encode_feature(Some(parts.root_domain.as_str()), &parts),
                encode_feature(Some("unrelated.example"), &parts),
            ];
            assert_eq!(
                outcomes,
                [Ternary::Absent, Ternary::Match, Ternary::Mismatch]
            );
        }
    }

    #[test]
    fn encode_vector_all_match_and_all_absent() {
        let parts = parts_of("https://www.facebook.com/");
        let all = IdentifiedDomains {
            cert_cn: Some("facebook.com".into()),
            cookie: Some("facebook.com".into()),
            most_common_link: Some("facebook.com".into()),
            logo: Some("facebook.com".into()),
            form_action: Some("facebook.com".into()),
        };
        let v = encode_vector(
            &all,
            &parts,
            Some(Label::Legitimate),
            "https://www.facebook.com/",
        );
        assert_eq!(v.values().map(Ternary::code), [1, 1, 1, 1, 1]);

        let none = IdentifiedDomains::default();
        let v = encode_vector(&none, &parts, None, "https://www.facebook.com/");
        assert_eq!(v.values().map(Ternary::code), [0, 0, 0, 0, 0]);
    }

    #[test]
    fn encode_vector_flags_conflicting_cn() {
        let parts = parts_of("https://www.facebook.com/");
        let ids = IdentifiedDomains {
            cert_cn: Some("github-facebook.com".into()),
            cookie: Some("facebook.com".into()),
            most_common_link: Some("facebook.com".into()),
            logo: Some("facebook.com".into()),
            form_action: Some("facebook.com".into()),
        };
        let v = encode_vector(
            &ids,
            &parts,
            Some(Label::Phishing),
            "https://www.facebook.com/",
        );
        assert_eq!(v.cert_cn, Ternary::Mismatch);
        assert_eq!(v.values().map(Ternary::code), [1, 1, -1, 1, 1]);
    }

    #[test]
    fn build_dataset_applies_min_present_rule() {
        let rows = vec![
            vector([1, 0, 0, 0, 0], Some(Label::Legitimate)),
            vector([1, -1, 0, 1, 0], Some(Label::Phishing)),
        ];
        let ds = build_dataset(rows, 3).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.records[0].label, Some(Label::Phishing));
    }

    #[test]
    fn build_dataset_zero_threshold_keeps_everything() {
        let rows = vec![
            vector([0, 0, 0, 0, 0], Some(Label::Legitimate)),
            vector([1, 0, 0, 0, 0], Some(Label::Phishing)),
        ];
        assert_eq!(build_dataset(rows, 0).unwrap().len(), 2);
    }

    #[test]
    fn build_dataset_is_idempotent() {
        let rows = vec![
            vector([1, 1, 1, 0, 0], Some(Label::Legitimate)),
            vector([1, 0, 0, 0, 0], Some(Label::Phishing)),
        ];
        let once = build_dataset(rows, 3).unwrap();
        let twice = build_dataset(once.records.clone(), 3).unwrap();
        assert_eq!(once.records, twice.records);
    }

    #[test]
    fn build_dataset_rejects_unlabeled_rows() {
        let rows = vec![vector([1, 1, 1, 1, 1], None)];
        assert!(matches!(
            build_dataset(rows, 0),
            Err(EncodeError::UnlabeledRecord { index: 0 })
        ));
    }

    #[test]
    fn build_dataset_empty_after_filter_is_ok() {
        let rows = vec![vector([1, 0, 0, 0, 0], Some(Label::Legitimate))];
        let ds = build_dataset(rows, 5).unwrap();
        assert!(ds.is_empty());
    }

    #[test]
    fn csv_round_trip_preserves_records() {
        let ds = build_dataset(
            vec![
                vector([1, -1, 0, 1, 1], Some(Label::Phishing)),
                vector([1, 1, 1, 1, 1], Some(Label::Legitimate)),
            ],
            0,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_feature_csv_to(&ds, &mut buf).unwrap();
        let back = read_feature_csv_from(buf.as_slice(), "test").unwrap();
        assert_eq!(back.records, ds.records);

        // A second write of the re-read dataset is byte-identical.
        let mut buf2 = Vec::new();
        write_feature_csv_to(&back, &mut buf2).unwrap();
        assert_eq!(buf, buf2);
    }

    #[test]
    fn csv_escapes_commas_in_urls() {
        let mut rec = vector([1, 1, 1, 1, 1], Some(Label::Legitimate));
        rec.source_url = "https://example.com/a,b?x=1%2".to_string();
        let ds = build_dataset(vec![rec.clone()], 0).unwrap();
        let mut buf = Vec::new();
        write_feature_csv_to(&ds, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().nth(1).unwrap().split(',').count(), 7);
        let back = read_feature_csv_from(buf.as_slice(), "test").unwrap();
        assert_eq!(back.records[0].source_url, rec.source_url);
    }

    #[test]
    fn csv_rejects_out_of_range_values() {
        let text = "url,label,FAD,LD,CN,MCLD,CD\nhttps://a.com/,T,2,0,0,0,0\n";
        let err = read_feature_csv_from(text.as_bytes(), "test").unwrap_err();
        match err {
            EncodeError::MalformedRow { line, reason } => {
                assert_eq!(line, 2);
                assert!(reason.contains("2"));
            }
            other => panic!("expected MalformedRow, got {other:?}"),
        }
    }

    #[test]
    fn csv_rejects_bad_labels_and_arity() {
        let bad_label = "url,label,FAD,LD,CN,MCLD,CD\nhttps://a.com/,X,1,0,0,0,0\n";
        assert!(matches!(
            read_feature_csv_from(bad_label.as_bytes(), "test"),
            Err(EncodeError::MalformedRow { line: 2, .. })
        ));
        let short_row = "url,label,FAD,LD,CN,MCLD,CD\nhttps://a.com/,T,1,0\n";
        assert!(matches!(
            read_feature_csv_from(short_row.as_bytes(), "test"),
            Err(EncodeError::MalformedRow { line: 2, .. })
        ));
    }

    #[test]
    fn csv_rejects_header_mismatch() {
        let text = "url,label,CN,LD,FAD,MCLD,CD\n";
        assert!(matches!(
            read_feature_csv_from(text.as_bytes(), "test"),
            Err(EncodeError::SchemaError { .. })
        ));
    }
}
