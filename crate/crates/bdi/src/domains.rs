//! URL and hostname decomposition against public-suffix rules.
//!
//! Everything downstream compares extracted evidence domains against the
//! page's own domain, so the split into subdomain / registrable domain /
//! public suffix has to be exact. The rule engine implements the standard
//! public-suffix list semantics (exact, wildcard and exception rules,
//! longest match wins, implicit `*` fallback for unknown suffixes).

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;
use url::{Host, Url};

/// A snapshot of the public suffix list, pinned in-repo so results are
/// reproducible regardless of upstream list churn.
const BUNDLED_RULES: &str = include_str!("../data/public_suffix_list.dat");

#[derive(Debug, Error)]
pub enum DomainError {
    #[error("failed to read suffix rules from {path}: {source}")]
    RuleIo {
        path: String,
        source: std::io::Error,
    },
    #[error("no usable rules found after parsing suffix rule file")]
    EmptyRuleSet,
    #[error("could not parse `{0}` as a URL or hostname")]
    UnparseableUrl(String),
    #[error("`{0}` has no host component")]
    HostMissing(String),
    #[error("host `{0}` contains an empty label")]
    EmptyLabel(String),
    #[error("host `{0}` is a bare public suffix; no registrable domain")]
    NoRegistrableDomain(String),
    #[error("domain `{0}` is empty after normalization")]
    EmptyAfterNormalize(String),
}

/// A URL's decomposition into subdomain, registrable domain and public
/// suffix.
///
/// `full_domain` is the complete host (`www.example.co.uk`); `root_domain`
/// is the registrable domain plus suffix (`example.co.uk`). For IP-address
/// hosts the whole address is the registrable part and the suffix is empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainParts {
    pub subdomain: String,
    pub registrable: String,
    pub suffix: String,
    pub full_domain: String,
    pub root_domain: String,
}

impl DomainParts {
    fn assemble(subdomain: String, registrable: String, suffix: String) -> Self {
        let join = |segments: &[&str]| {
            segments
                .iter()
                .filter(|s| !s.is_empty())
                .copied()
                .collect::<Vec<_>>()
                .join(".")
        };
        let full_domain = join(&[&subdomain, &registrable, &suffix]);
        let root_domain = join(&[&registrable, &suffix]);
        DomainParts {
            subdomain,
            registrable,
            suffix,
            full_domain,
            root_domain,
        }
    }
}

impl fmt::Display for DomainParts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.full_domain)
    }
}

/// Parsed public-suffix rules. Immutable after load; safe to share across
/// threads.
#[derive(Debug, Clone)]
pub struct SuffixRules {
    exact: HashSet<String>,
    /// Wildcard rules stored by their base, e.g. `*.ck` is stored as `ck`.
    wildcard: HashSet<String>,
    /// Exception rules stored without the `!`, e.g. `!www.ck` as `www.ck`.
    exception: HashSet<String>,
    source_checksum: String,
    skipped_lines: usize,
}

impl SuffixRules {
    /// Parses rules from the standard public-suffix list text format: one
    /// rule per line, `//` comments, `!` exceptions, `*.` wildcards.
    /// Internationalized rules are converted to their punycode form so they
    /// match hosts, which always arrive ASCII-encoded. Unrecognized lines
    /// are skipped and counted in [`SuffixRules::skipped_lines`].
    pub fn parse(text: &str) -> Result<Self, DomainError> {
        let mut exact = HashSet::new();
        let mut wildcard = HashSet::new();
        let mut exception = HashSet::new();
        let mut skipped = 0usize;

        for raw_line in text.lines() {
            let line = raw_line.trim();
            if line.is_empty() || line.starts_with("//") {
                continue;
            }
            // A rule ends at the first whitespace.
            let rule = line.split_whitespace().next().unwrap_or("");
            let (is_exception, body) = match rule.strip_prefix('!') {
                Some(rest) => (true, rest),
                None => (false, rule),
            };
            let (is_wildcard, body) = match body.strip_prefix("*.") {
                Some(rest) => (true, rest),
                None => (false, body),
            };
            let Some(base) = canonical_rule_base(body) else {
                log::warn!("skipping unrecognized suffix rule line: {raw_line}");
                skipped += 1;
                continue;
            };
            match (is_exception, is_wildcard) {
                (true, false) => {
                    exception.insert(base);
                }
                (false, true) => {
                    wildcard.insert(base);
                }
                (false, false) => {
                    exact.insert(base);
                }
                (true, true) => {
                    // `!*.x` has no defined meaning.
                    skipped += 1;
                }
            }
        }

        if exact.is_empty() && wildcard.is_empty() && exception.is_empty() {
            return Err(DomainError::EmptyRuleSet);
        }

        let mut hasher = Sha256::new();
        hasher.update(text.as_bytes());
        let source_checksum = hex_string(&hasher.finalize());

        Ok(SuffixRules {
            exact,
            wildcard,
            exception,
            source_checksum,
            skipped_lines: skipped,
        })
    }

    /// The rule snapshot compiled into the binary.
    pub fn bundled() -> &'static SuffixRules {
        static RULES: OnceLock<SuffixRules> = OnceLock::new();
        RULES.get_or_init(|| {
            SuffixRules::parse(BUNDLED_RULES).expect("bundled public suffix list must parse")
        })
    }

    pub fn exact_count(&self) -> usize {
        self.exact.len()
    }

    pub fn wildcard_count(&self) -> usize {
        self.wildcard.len()
    }

    pub fn exception_count(&self) -> usize {
        self.exception.len()
    }

    /// SHA-256 of the source text, for provenance.
    pub fn source_checksum(&self) -> &str {
        &self.source_checksum
    }

    /// Number of lines that did not parse as rules.
    pub fn skipped_lines(&self) -> usize {
        self.skipped_lines
    }

    /// Number of labels of the public suffix of `labels`, which is the
    /// host split on `.`.
    ///
    /// Exception rules take precedence, then the matching rule with the most
    /// labels; a host matching no rule at all falls back to the implicit
    /// `*` rule (its last label is the suffix).
    fn suffix_label_count(&self, labels: &[&str]) -> usize {
        let n = labels.len();
        // Exception rules win outright: the suffix is the exception with its
        // leftmost label removed.
        for start in 0..n {
            let candidate = labels[start..].join(".");
            if self.exception.contains(&candidate) {
                return n - start - 1;
            }
        }
        // Longest normal match: scan from the longest candidate down.
        for start in 0..n {
            let candidate = labels[start..].join(".");
            if self.exact.contains(&candidate) {
                return n - start;
            }
            // `*.base` matches candidates of the form `<label>.base`.
            if n - start >= 2 && self.wildcard.contains(&labels[start + 1..].join(".")) {
                return n - start;
            }
        }
        1
    }
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Lowercases a rule and converts internationalized labels to punycode.
/// Returns `None` for rules that cannot form a valid suffix.
fn canonical_rule_base(body: &str) -> Option<String> {
    if body.is_empty() || body.contains('*') {
        return None;
    }
    let ascii = if body.is_ascii() {
        body.to_ascii_lowercase()
    } else {
        idna::domain_to_ascii(body).ok()?
    };
    if ascii.is_empty() || ascii.split('.').any(|label| label.is_empty()) {
        return None;
    }
    Some(ascii)
}

/// Loads suffix rules from a file in the standard public-suffix list text
/// format.
pub fn load_suffix_rules(path: impl AsRef<Path>) -> Result<SuffixRules, DomainError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| DomainError::RuleIo {
        path: path.display().to_string(),
        source,
    })?;
    SuffixRules::parse(&text)
}

/// Extracts the host from an absolute URL or bare hostname. Domains come
/// back lowercased and punycoded; IP hosts are flagged.
fn host_of(input: &str) -> Result<(String, bool), DomainError> {
    let parsed = match Url::parse(input) {
        Ok(url) => url,
        Err(url::ParseError::RelativeUrlWithoutBase) => {
            // Bare hostname: promote to a URL.
            Url::parse(&format!("https://{input}"))
                .map_err(|_| DomainError::UnparseableUrl(input.to_string()))?
        }
        Err(_) => return Err(DomainError::UnparseableUrl(input.to_string())),
    };
    match parsed.host() {
        Some(Host::Domain(d)) => Ok((d.to_ascii_lowercase(), false)),
        Some(Host::Ipv4(a)) => Ok((a.to_string(), true)),
        Some(Host::Ipv6(a)) => Ok((a.to_string(), true)),
        None => Err(DomainError::HostMissing(input.to_string())),
    }
}

/// Splits a URL or bare hostname into [`DomainParts`] using the longest
/// matching public suffix. Port, path, query and credentials are dropped.
/// IP-address hosts yield the whole address as the registrable part with an
/// empty suffix.
pub fn parse_url_domain(input: &str, rules: &SuffixRules) -> Result<DomainParts, DomainError> {
    let (host, is_ip) = host_of(input)?;
    if is_ip {
        return Ok(DomainParts::assemble(String::new(), host, String::new()));
    }
    // Accept a single trailing dot (FQDN form).
    let host = host.strip_suffix('.').unwrap_or(&host).to_string();
    if host.is_empty() {
        return Err(DomainError::HostMissing(input.to_string()));
    }
    let labels: Vec<&str> = host.split('.').collect();
    if labels.iter().any(|l| l.is_empty()) {
        return Err(DomainError::EmptyLabel(host.clone()));
    }
    let suffix_len = rules.suffix_label_count(&labels);
    if suffix_len >= labels.len() {
        return Err(DomainError::NoRegistrableDomain(host.clone()));
    }
    let split = labels.len() - suffix_len;
    let suffix = labels[split..].join(".");
    let registrable = labels[split - 1].to_string();
    let subdomain = labels[..split - 1].join(".");
    Ok(DomainParts::assemble(subdomain, registrable, suffix))
}

/// Cleans a raw candidate domain for matching: trims whitespace, lowercases,
/// then strips at most one leading `*.`, one leading `.` and one leading
/// `www.`, in that order.
pub fn normalize_domain(raw: &str) -> Result<String, DomainError> {
    let mut s = raw.trim().to_lowercase();
    for prefix in ["*.", ".", "www."] {
        if let Some(rest) = s.strip_prefix(prefix) {
            s = rest.to_string();
        }
    }
    let s = s.trim().to_string();
    if s.is_empty() {
        return Err(DomainError::EmptyAfterNormalize(raw.to_string()));
    }
    Ok(s)
}

/// True iff `candidate` equals the page's full domain or its root domain,
/// case-insensitively. No substring credit: `github-facebook.com` does not
/// match `facebook.com`.
pub fn domains_match(candidate: &str, parts: &DomainParts) -> bool {
    let c = candidate.to_lowercase();
    c == parts.full_domain || c == parts.root_domain
}
