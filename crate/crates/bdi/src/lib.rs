//! Brand-domain identification (BDI) toolkit for phishing detection.
//!
//! Legitimate brand sites embed their own domain everywhere: in the TLS
//! certificate, in cookies, in most hyperlinks, in logo image URLs and in
//! form submission targets. Phishing pages imitating a brand usually cannot
//! keep all of those consistent. This crate extracts those five
//! tightly-bound domain features from a page, encodes each as a ternary
//! indicator (matches the page's own domain, mismatches, or absent) and
//! provides the feature-selection and classification machinery to rank the
//! features and evaluate classifiers over every feature combination.
//!
//! Pipeline: [`snapshot`] acquires an observation of a URL (certificate CN,
//! cookies, HTML) and persists it for offline replay; [`extract`] pulls the
//! five candidate domains out of a snapshot; [`encode`] turns them into
//! ternary feature vectors and labeled datasets; [`select`] ranks features
//! with four filter evaluators; [`learn`] trains and evaluates classifiers;
//! [`scanner`] composes the whole pipeline into a URL-in, verdict-out call.

pub mod domains;
pub mod encode;
pub mod extract;
pub mod learn;
pub mod scanner;
pub mod select;
pub mod snapshot;
pub mod synth;

pub use domains::{DomainParts, SuffixRules};
pub use encode::{Dataset, FeatureName, FeatureVector, Label, Ternary};
pub use extract::IdentifiedDomains;
pub use learn::{ModelKind, TrainedModel};
pub use scanner::ScanResult;
pub use snapshot::{FetchPolicy, PageSnapshot};
