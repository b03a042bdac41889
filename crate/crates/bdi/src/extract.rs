//! Extraction of the five candidate identified domains from a snapshot:
//! certificate CN, cookie domain, most common hyperlink domain, logo image
//! domain and form action domain.
//!
//! HTML parsing is lenient on purpose — phishing pages are frequently
//! malformed — and extraction never fails: missing evidence is simply an
//! absent field.

use std::collections::HashMap;

use scraper::{Html, Selector};
use serde::{Deserialize, Serialize};
use url::Url;

use crate::domains::{normalize_domain, parse_url_domain, SuffixRules};
use crate::encode::FeatureName;
use crate::snapshot::PageSnapshot;

/// Image `src` keywords that mark a logo asset.
pub const DEFAULT_LOGO_KEYWORDS: &[&str] = &["logo"];

/// The five extracted candidate domains, each already normalized (lowercase,
/// no `*.`/`.`/`www.` prefix) or absent when the evidence is missing.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentifiedDomains {
    pub cert_cn: Option<String>,
    pub cookie: Option<String>,
    pub most_common_link: Option<String>,
    pub logo: Option<String>,
    pub form_action: Option<String>,
}

impl IdentifiedDomains {
    pub fn get(&self, feature: FeatureName) -> Option<&str> {
        match feature {
            FeatureName::FormAction => self.form_action.as_deref(),
            FeatureName::Logo => self.logo.as_deref(),
            FeatureName::CertCn => self.cert_cn.as_deref(),
            FeatureName::MostCommonLink => self.most_common_link.as_deref(),
            FeatureName::Cookie => self.cookie.as_deref(),
        }
    }
}

/// A normalized candidate must still look like a host to count as domain
/// evidence; certificate subjects sometimes carry free-text names instead.
fn looks_like_domain(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_' | ':'))
        && s.chars().any(|c| c.is_ascii_alphanumeric())
}

/// Cleans the certificate CN; free-text subjects ("Internal Gateway") yield
/// absent.
pub fn extract_cn(snap: &PageSnapshot) -> Option<String> {
    let raw = snap.cert_cn.as_deref()?;
    match normalize_domain(raw) {
        Ok(cleaned) if looks_like_domain(&cleaned) => Some(cleaned),
        Ok(cleaned) => {
            log::debug!("certificate CN {raw:?} is not domain-shaped ({cleaned:?}); dropped");
            None
        }
        Err(_) => None,
    }
}

/// Highest count wins; ties go to the lexicographically smallest domain.
fn most_frequent(domains: impl IntoIterator<Item = String>) -> Option<String> {
    let mut counts: HashMap<String, usize> = HashMap::new();
    for d in domains {
        *counts.entry(d).or_insert(0) += 1;
    }
    counts
        .into_iter()
        .max_by(|(name_a, count_a), (name_b, count_b)| {
            count_a.cmp(count_b).then_with(|| name_b.cmp(name_a))
        })
        .map(|(name, _)| name)
}

/// The most frequent domain among the snapshot's `Set-Cookie` domains.
pub fn extract_cookie_domain(snap: &PageSnapshot) -> Option<String> {
    most_frequent(
        snap.cookie_domains
            .iter()
            .filter_map(|raw| normalize_domain(raw).ok()),
    )
}

/// Decodes the body using the declared charset, falling back to UTF-8 with
/// replacement. A body that decodes to nothing is treated as absent.
fn decoded_html(snap: &PageSnapshot) -> Option<String> {
    let bytes = snap.html.as_deref()?;
    let encoding = snap
        .charset
        .as_deref()
        .and_then(|label| encoding_rs::Encoding::for_label(label.as_bytes()))
        .unwrap_or(encoding_rs::UTF_8);
    let (text, _, _) = encoding.decode(bytes);
    Some(text.into_owned())
}

/// Resolves an attribute value against the page's final URL and keeps only
/// http(s) targets. Pure-fragment and empty references are not link
/// evidence.
fn resolve_http_url(base: &Url, raw: &str) -> Option<Url> {
    let trimmed = raw.trim();
    if trimmed.is_empty() || trimmed.starts_with('#') {
        return None;
    }
    let joined = base.join(trimmed).ok()?;
    matches!(joined.scheme(), "http" | "https").then_some(joined)
}

fn full_domain_of(url: &Url, rules: &SuffixRules) -> Option<String> {
    parse_url_domain(url.as_str(), rules)
        .ok()
        .map(|parts| parts.full_domain)
}

fn selector(css: &str) -> Selector {
    Selector::parse(css).expect("static selector parses")
}

/// The modal domain among anchor hrefs, counted per occurrence. Relative
/// hrefs resolve against the final URL; `mailto:`, `javascript:` and
/// fragment-only targets are dropped.
pub fn extract_most_common_link_domain(snap: &PageSnapshot, rules: &SuffixRules) -> Option<String> {
    let html = decoded_html(snap)?;
    let base = Url::parse(&snap.final_url).ok()?;
    let doc = Html::parse_document(&html);
    let anchors = selector("a");
    let domains = doc
        .select(&anchors)
        .filter_map(|a| a.value().attr("href"))
        .filter_map(|href| resolve_http_url(&base, href))
        .filter_map(|url| full_domain_of(&url, rules));
    let winner = most_frequent(domains)?;
    normalize_domain(&winner).ok()
}

/// The modal domain among image sources whose `src` contains a logo
/// keyword (case-insensitive substring on the attribute value).
pub fn extract_logo_domain(
    snap: &PageSnapshot,
    rules: &SuffixRules,
    keywords: &[String],
) -> Option<String> {
    let defaults: Vec<String> = DEFAULT_LOGO_KEYWORDS
        .iter()
        .map(|s| s.to_string())
        .collect();
    let keywords: &[String] = if keywords.is_empty() {
        &defaults
    } else {
        keywords
    };
    let lowered: Vec<String> = keywords.iter().map(|k| k.to_lowercase()).collect();

    let html = decoded_html(snap)?;
    let base = Url::parse(&snap.final_url).ok()?;
    let doc = Html::parse_document(&html);
    let images = selector("img");
    let domains = doc
        .select(&images)
        .filter_map(|img| img.value().attr("src"))
        .filter(|src| {
            let src = src.to_lowercase();
            lowered.iter().any(|k| src.contains(k))
        })
        .filter_map(|src| resolve_http_url(&base, src))
        .filter_map(|url| full_domain_of(&url, rules));
    let winner = most_frequent(domains)?;
    normalize_domain(&winner).ok()
}

/// The longest domain (by character count, ties lexicographically smallest)
/// among form `action` targets. An explicit empty `action` submits to the
/// page itself; forms without an `action` attribute are skipped.
pub fn extract_form_action_domain(snap: &PageSnapshot, rules: &SuffixRules) -> Option<String> {
    let html = decoded_html(snap)?;
    let base = Url::parse(&snap.final_url).ok()?;
    let doc = Html::parse_document(&html);
    let winner = doc
        .select(&selector("form"))
        .filter_map(|form| form.value().attr("action"))
        .filter_map(|action| {
            if action.trim().is_empty() {
                Some(base.clone())
            } else {
                resolve_http_url(&base, action)
            }
        })
        .filter_map(|url| full_domain_of(&url, rules))
        .max_by(|a, b| a.len().cmp(&b.len()).then_with(|| b.cmp(a)))?;
    normalize_domain(&winner).ok()
}

/// Runs all five extractors; never fails — missing evidence stays absent.
pub fn extract_all(
    snap: &PageSnapshot,
    rules: &SuffixRules,
    logo_keywords: &[String],
) -> IdentifiedDomains {
    IdentifiedDomains {
        cert_cn: extract_cn(snap),
        cookie: extract_cookie_domain(snap),
        most_common_link: extract_most_common_link_domain(snap, rules),
        logo: extract_logo_domain(snap, rules, logo_keywords),
        form_action: extract_form_action_domain(snap, rules),
    }
}
