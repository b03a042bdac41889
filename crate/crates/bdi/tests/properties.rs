//! Property tests over the domain, extraction, encoding and evaluation
//! invariants.

mod common;

use proptest::prelude::*;

use bdi::domains::{domains_match, normalize_domain, parse_url_domain, SuffixRules};
use bdi::encode::{read_feature_csv_from, write_feature_csv_to, FeatureVector, Label, Ternary};
use bdi::extract::{extract_most_common_link_domain, IdentifiedDomains};
use bdi::learn::{compute_metrics, make_folds, ConfusionCounts};
use bdi::select::{relieff_scores, ReliefSample};

use common::{dataset_from_codes, offline_snapshot};

fn label_strategy() -> impl Strategy<Value = String> {
    "[a-z][a-z0-9-]{0,8}[a-z0-9]".prop_map(|s| s)
}

fn domain_strategy() -> impl Strategy<Value = String> {
    (
        label_strategy(),
        label_strategy(),
        prop::sample::select(vec!["com", "org", "co.uk", "example"]),
    )
        .prop_map(|(a, b, tld)| format!("{a}.{b}.{tld}"))
}

fn ternary_row() -> impl Strategy<Value = [i8; 5]> {
    prop::array::uniform5(prop::sample::select(vec![-1i8, 0, 1]))
}

fn labeled_rows(max: usize) -> impl Strategy<Value = Vec<([i8; 5], Label)>> {
    prop::collection::vec(
        (
            ternary_row(),
            prop::bool::ANY.prop_map(|b| {
                if b {
                    Label::Phishing
                } else {
                    Label::Legitimate
                }
            }),
        ),
        2..max,
    )
}

proptest! {
    // Prefixed inputs normalize to the same clean domain again: the clean
    // form starts with a plain label, so a second pass strips nothing.
    #[test]
    fn normalize_is_idempotent_on_prefixed_domains(
        domain in domain_strategy(),
        prefix in prop::sample::select(vec!["", "*.", ".", "www.", "*.www.", ".www."]),
    ) {
        let raw = format!("{prefix}{domain}");
        let once = normalize_domain(&raw).unwrap();
        let twice = normalize_domain(&once).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn matching_ignores_candidate_case(domain in domain_strategy(), upper in prop::bool::ANY) {
        let parts = parse_url_domain(&domain, SuffixRules::bundled()).unwrap();
        let candidate = if upper { parts.root_domain.to_uppercase() } else { parts.root_domain.clone() };
        prop_assert!(domains_match(&candidate, &parts));
    }

    #[test]
    fn root_domain_is_a_suffix_of_full_domain(host in domain_strategy()) {
        let parts = parse_url_domain(&host, SuffixRules::bundled()).unwrap();
        prop_assert!(parts.full_domain.ends_with(&parts.root_domain));
        let full_labels = parts.full_domain.split('.').count();
        let root_labels = parts.root_domain.split('.').count();
        prop_assert!(root_labels <= full_labels);
        prop_assert!(!parts.registrable.is_empty());
    }

    // A strict-majority domain among anchors always wins the link feature.
    #[test]
    fn strict_link_majority_wins(
        winner_count in 3usize..8,
        noise in prop::collection::vec(domain_strategy(), 0..3),
    ) {
        let mut anchors = String::new();
        for i in 0..winner_count {
            anchors.push_str(&format!(r#"<a href="https://majority-brand.example/p{i}">x</a>"#));
        }
        for (i, d) in noise.iter().enumerate() {
            // At most 2 noise links, each to a distinct sub-path host.
            anchors.push_str(&format!(r#"<a href="https://n{i}.{d}/x">y</a>"#));
        }
        let html = format!("<html><body>{anchors}</body></html>");
        let snap = offline_snapshot("https://page.example/", None, &[], Some(&html));
        let got = extract_most_common_link_domain(&snap, SuffixRules::bundled());
        prop_assert_eq!(got.as_deref(), Some("majority-brand.example"));
    }

    // No extractor output may come from a non-http(s) scheme.
    #[test]
    fn non_http_schemes_never_produce_link_evidence(
        scheme in prop::sample::select(vec!["mailto:a@b.example", "javascript:void(0)", "tel:+155501", "data:text/plain,hi", "#frag"]),
        count in 1usize..5,
    ) {
        let anchors: String = (0..count)
            .map(|_| format!(r#"<a href="{scheme}">x</a>"#))
            .collect();
        let snap = offline_snapshot(
            "https://page.example/",
            None,
            &[],
            Some(&format!("<body>{anchors}</body>")),
        );
        prop_assert_eq!(extract_most_common_link_domain(&snap, SuffixRules::bundled()), None);
    }

    #[test]
    fn metric_identities_hold_for_any_counts(
        tp in 0u64..500, fn_ in 0u64..500, tn in 0u64..500, fp in 0u64..500,
    ) {
        prop_assume!(tp + fn_ + tn + fp > 0);
        let counts = ConfusionCounts { true_pos: tp, false_neg: fn_, true_neg: tn, false_pos: fp };
        let m = compute_metrics(&counts).unwrap();
        // The true-positive-rate and recall formulas are the same quantity.
        prop_assert_eq!(m.tpr, m.recall);
        if m.precision + m.recall > 0.0 {
            let f = 2.0 * m.precision * m.recall / (m.precision + m.recall);
            prop_assert!((m.f_measure - f).abs() < 1e-12);
        }
        prop_assert_eq!(m.accuracy, (tp + tn) as f64 / (tp + tn + fp + fn_) as f64);
        for v in [m.tpr, m.fpr, m.precision, m.recall, m.f_measure, m.accuracy] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn feature_csv_round_trips(rows in labeled_rows(40)) {
        let ds = dataset_from_codes(&rows);
        let mut buf = Vec::new();
        write_feature_csv_to(&ds, &mut buf).unwrap();
        let back = read_feature_csv_from(buf.as_slice(), "prop").unwrap();
        prop_assert_eq!(&back.records, &ds.records);
        let mut buf2 = Vec::new();
        write_feature_csv_to(&back, &mut buf2).unwrap();
        prop_assert_eq!(buf, buf2);
    }

    #[test]
    fn folds_partition_for_any_labels(
        rows in labeled_rows(60),
        k in 2usize..6,
        stratified in prop::bool::ANY,
        seed in 0u64..1000,
    ) {
        prop_assume!(rows.len() >= k);
        let labels: Vec<Label> = rows.iter().map(|(_, l)| *l).collect();
        let folds = make_folds(&labels, k, stratified, seed);
        let mut seen: Vec<usize> = folds.iter().flatten().copied().collect();
        seen.sort();
        prop_assert_eq!(seen, (0..labels.len()).collect::<Vec<_>>());
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }

    #[test]
    fn relieff_is_bitwise_reproducible(rows in labeled_rows(30), seed in 0u64..500) {
        let ds = dataset_from_codes(&rows);
        let counts = ds.class_counts();
        prop_assume!(counts[0] > 0 && counts[1] > 0);
        let a = relieff_scores(&ds, 3, ReliefSample::All, seed).unwrap();
        let b = relieff_scores(&ds, 3, ReliefSample::All, seed).unwrap();
        for name in ["FAD", "LD", "CN", "MCLD", "CD"] {
            prop_assert_eq!(a.scores[name].to_bits(), b.scores[name].to_bits());
        }
    }

    // Encoding and extraction compose deterministically: one snapshot, one
    // vector.
    #[test]
    fn snapshot_encoding_is_deterministic(
        cn_match in prop::bool::ANY,
        cookie in prop::option::of(prop::sample::select(vec![".self.example", ".other.example"])),
    ) {
        let cn = if cn_match { "*.self.example" } else { "evil.example" };
        let cookies: Vec<&str> = cookie.iter().copied().collect();
        let snap = offline_snapshot("https://www.self.example/", Some(cn), &cookies, None);
        let rules = SuffixRules::bundled();
        let parts = parse_url_domain(&snap.final_url, rules).unwrap();
        let run = || {
            let ids: IdentifiedDomains = bdi::extract::extract_all(&snap, rules, &[]);
            bdi::encode::encode_vector(&ids, &parts, None, &snap.requested_url)
        };
        let a: FeatureVector = run();
        let b: FeatureVector = run();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.values().iter().all(|v| Ternary::ALL.contains(v)));
    }
}
