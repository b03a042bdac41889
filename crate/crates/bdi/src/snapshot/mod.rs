//! Page observation: fetch a URL once and keep everything the feature
//! extractors need — final URL, TLS certificate common name, `Set-Cookie`
//! domains and the raw HTML — in a replayable JSON record.
//!
//! Snapshots are the offline boundary of the pipeline: every stage after
//! acquisition works from a snapshot file, so runs are reproducible without
//! network access.

mod tls;

use std::io::Read;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;
use url::Url;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("unsupported scheme in `{0}`; only http and https can be fetched")]
    UnsupportedScheme(String),
    #[error("invalid URL `{url}`: {reason}")]
    InvalidUrl { url: String, reason: String },
    #[error("DNS resolution failed: {0}")]
    Dns(String),
    #[error("connection failed: {0}")]
    Connect(String),
    #[error("timed out: {0}")]
    Timeout(String),
    #[error("TLS failure: {0}")]
    Tls(String),
    #[error("redirect loop or limit exceeded: {0}")]
    RedirectLoop(String),
    #[error("transport failure: {0}")]
    Http(String),
    #[error("could not build HTTP client: {0}")]
    Client(String),
    #[error("I/O failure on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed snapshot {path}: {detail}")]
    Malformed { path: String, detail: String },
}

impl SnapshotError {
    /// Short stage tag used in [`FetchNote`]s.
    pub fn stage(&self) -> &'static str {
        match self {
            SnapshotError::UnsupportedScheme(_) | SnapshotError::InvalidUrl { .. } => "url",
            SnapshotError::Dns(_) => "dns",
            SnapshotError::Connect(_) => "connect",
            SnapshotError::Timeout(_) => "timeout",
            SnapshotError::Tls(_) => "tls",
            SnapshotError::RedirectLoop(_) => "redirect",
            SnapshotError::Http(_) => "http",
            SnapshotError::Client(_) => "client",
            SnapshotError::Io { .. } => "io",
            SnapshotError::Malformed { .. } => "format",
        }
    }
}

/// A structured note about a partial failure during acquisition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FetchNote {
    pub stage: String,
    pub message: String,
}

impl FetchNote {
    pub fn new(stage: &str, message: impl Into<String>) -> Self {
        FetchNote {
            stage: stage.to_string(),
            message: message.into(),
        }
    }
}

/// Transport limits for one fetch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FetchPolicy {
    pub connect_timeout: Duration,
    pub total_timeout: Duration,
    pub max_redirects: usize,
    pub max_body_bytes: usize,
    pub user_agent: String,
    /// When false (the default), invalid certificates are accepted: the
    /// certificate's CN is evidence either way, and phishing sites often
    /// present broken chains.
    pub verify_tls: bool,
}

impl Default for FetchPolicy {
    fn default() -> Self {
        FetchPolicy {
            connect_timeout: Duration::from_secs(10),
            total_timeout: Duration::from_secs(30),
            max_redirects: 10,
            max_body_bytes: 5 * 1024 * 1024,
            user_agent: "Mozilla/5.0 (Windows NT 10.0; Win64; x64) AppleWebKit/537.36 \
                         (KHTML, like Gecko) Chrome/120.0 Safari/537.36"
                .to_string(),
            verify_tls: false,
        }
    }
}

/// One observation of a target URL.
///
/// `cert_cn` holds the leaf certificate's subject CN verbatim; cleaning
/// happens downstream. `cookie_domains` holds the `Domain` attribute of
/// every `Set-Cookie` header across the redirect chain in arrival order,
/// with host-only cookies recorded as the responding host. The body is kept
/// as raw bytes (base64 in the JSON form) with the declared charset noted,
/// so replay is byte-exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageSnapshot {
    pub requested_url: String,
    pub final_url: String,
    pub fetched_at: DateTime<Utc>,
    pub status_code: u16,
    pub cert_cn: Option<String>,
    pub cookie_domains: Vec<String>,
    #[serde(
        rename = "html_b64",
        serialize_with = "ser_body",
        deserialize_with = "de_body"
    )]
    pub html: Option<Vec<u8>>,
    #[serde(default)]
    pub charset: Option<String>,
    pub fetch_errors: Vec<FetchNote>,
}

fn ser_body<S: serde::Serializer>(body: &Option<Vec<u8>>, s: S) -> Result<S::Ok, S::Error> {
    match body {
        Some(bytes) => s.serialize_some(&BASE64.encode(bytes)),
        None => s.serialize_none(),
    }
}

fn de_body<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Option<Vec<u8>>, D::Error> {
    let encoded: Option<String> = Option::deserialize(d)?;
    encoded
        .map(|text| BASE64.decode(text.as_bytes()))
        .transpose()
        .map_err(|e| serde::de::Error::custom(format!("bad base64 body: {e}")))
}

impl PageSnapshot {
    /// An all-failure snapshot for batch slots where nothing was captured.
    pub fn from_error(url: &str, err: &SnapshotError) -> Self {
        PageSnapshot {
            requested_url: url.to_string(),
            final_url: url.to_string(),
            fetched_at: Utc::now(),
            status_code: 0,
            cert_cn: None,
            cookie_domains: Vec::new(),
            html: None,
            charset: None,
            fetch_errors: vec![FetchNote::new(err.stage(), err.to_string())],
        }
    }
}

/// Writes one snapshot as a self-contained JSON record. The filename is a
/// content address derived from the requested URL and acquisition time, so
/// re-saving the same snapshot is idempotent.
pub fn save_snapshot(snap: &PageSnapshot, dir: impl AsRef<Path>) -> Result<PathBuf, SnapshotError> {
    let dir = dir.as_ref();
    let mut hasher = Sha256::new();
    hasher.update(snap.requested_url.as_bytes());
    hasher.update(snap.fetched_at.to_rfc3339().as_bytes());
    let digest = hasher.finalize();
    let name: String = digest[..16].iter().map(|b| format!("{b:02x}")).collect();
    let path = dir.join(format!("{name}.json"));
    let json = serde_json::to_string_pretty(snap).expect("snapshot serializes");
    std::fs::write(&path, json).map_err(|source| SnapshotError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(path)
}

/// Reads a snapshot back; unknown keys are ignored for forward
/// compatibility, missing required keys are an error.
pub fn load_snapshot(path: impl AsRef<Path>) -> Result<PageSnapshot, SnapshotError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| SnapshotError::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| SnapshotError::Malformed {
        path: path.display().to_string(),
        detail: e.to_string(),
    })
}

/// Promotes bare hostnames to https and validates the scheme.
fn prepare_url(url: &str) -> Result<Url, SnapshotError> {
    let parsed = match Url::parse(url) {
        Ok(u) => u,
        Err(url::ParseError::RelativeUrlWithoutBase) => Url::parse(&format!("https://{url}"))
            .map_err(|e| SnapshotError::InvalidUrl {
                url: url.to_string(),
                reason: e.to_string(),
            })?,
        Err(e) => {
            return Err(SnapshotError::InvalidUrl {
                url: url.to_string(),
                reason: e.to_string(),
            })
        }
    };
    match parsed.scheme() {
        "http" | "https" => Ok(parsed),
        other => Err(SnapshotError::UnsupportedScheme(format!(
            "{url} (scheme {other})"
        ))),
    }
}

fn classify(err: &reqwest::Error) -> SnapshotError {
    let mut chain: Vec<String> = Vec::new();
    let mut source: Option<&(dyn std::error::Error + 'static)> = Some(err);
    while let Some(e) = source {
        chain.push(e.to_string());
        source = e.source();
    }
    let text = chain.join(": ");
    let lower = text.to_lowercase();
    if err.is_timeout() {
        SnapshotError::Timeout(text)
    } else if lower.contains("dns") || lower.contains("resolve") || lower.contains("lookup") {
        SnapshotError::Dns(text)
    } else if lower.contains("certificate") || lower.contains("tls") || lower.contains("handshake")
    {
        SnapshotError::Tls(text)
    } else if err.is_connect() {
        SnapshotError::Connect(text)
    } else {
        SnapshotError::Http(text)
    }
}

/// Pulls the `Domain` attribute out of one `Set-Cookie` header value.
fn cookie_domain_attr(set_cookie: &str) -> Option<String> {
    for part in set_cookie.split(';').skip(1) {
        let mut kv = part.splitn(2, '=');
        let key = kv.next().unwrap_or("").trim();
        if key.eq_ignore_ascii_case("domain") {
            return kv
                .next()
                .map(|v| v.trim().to_string())
                .filter(|v| !v.is_empty());
        }
    }
    None
}

fn charset_of(content_type: Option<&str>) -> Option<String> {
    let ct = content_type?;
    for part in ct.split(';').skip(1) {
        let mut kv = part.splitn(2, '=');
        if kv
            .next()
            .unwrap_or("")
            .trim()
            .eq_ignore_ascii_case("charset")
        {
            return kv
                .next()
                .map(|v| v.trim().trim_matches('"').to_ascii_lowercase())
                .filter(|v| !v.is_empty());
        }
    }
    None
}

fn host_for_cookies(url: &Url) -> String {
    url.host_str()
        .unwrap_or_default()
        .trim_matches(['[', ']'])
        .to_string()
}

/// Fetches one observation of `url`.
///
/// Redirects are followed manually up to the policy limit so that
/// `Set-Cookie` headers from every hop are captured. Partial failures are
/// recorded as [`FetchNote`]s instead of aborting; an `Err` is returned only
/// when nothing at all could be captured.
pub fn fetch_snapshot(url: &str, policy: &FetchPolicy) -> Result<PageSnapshot, SnapshotError> {
    let start_url = prepare_url(url)?;
    let client = reqwest::blocking::Client::builder()
        .redirect(reqwest::redirect::Policy::none())
        .danger_accept_invalid_certs(!policy.verify_tls)
        .connect_timeout(policy.connect_timeout)
        .timeout(policy.total_timeout)
        .user_agent(policy.user_agent.clone())
        .cookie_store(true)
        .build()
        .map_err(|e| SnapshotError::Client(e.to_string()))?;

    let mut notes: Vec<FetchNote> = Vec::new();
    let mut cookie_domains: Vec<String> = Vec::new();
    let mut current = start_url.clone();
    let mut response = match client.get(current.clone()).send() {
        Ok(r) => r,
        Err(e) => return Err(classify(&e)),
    };

    let mut hops = 0usize;
    loop {
        for value in response.headers().get_all(reqwest::header::SET_COOKIE) {
            let raw = String::from_utf8_lossy(value.as_bytes());
            let domain = cookie_domain_attr(&raw).unwrap_or_else(|| host_for_cookies(&current));
            cookie_domains.push(domain);
        }
        let location = if response.status().is_redirection() {
            response
                .headers()
                .get(reqwest::header::LOCATION)
                .and_then(|v| v.to_str().ok())
                .map(str::to_string)
        } else {
            None
        };
        let Some(location) = location else { break };
        if hops >= policy.max_redirects {
            notes.push(FetchNote::new(
                "redirect",
                format!("stopped after {hops} redirects at {current}"),
            ));
            break;
        }
        let next = match current.join(&location) {
            Ok(u) if matches!(u.scheme(), "http" | "https") => u,
            Ok(u) => {
                notes.push(FetchNote::new(
                    "redirect",
                    format!("refusing redirect to non-http target {u}"),
                ));
                break;
            }
            Err(e) => {
                notes.push(FetchNote::new(
                    "redirect",
                    format!("unparseable Location `{location}`: {e}"),
                ));
                break;
            }
        };
        match client.get(next.clone()).send() {
            Ok(r) => {
                current = next;
                response = r;
                hops += 1;
            }
            Err(e) => {
                let classified = classify(&e);
                notes.push(FetchNote::new(
                    classified.stage(),
                    format!("redirect hop to {next} failed: {classified}"),
                ));
                break;
            }
        }
    }

    let final_url = current.clone();
    let status_code = response.status().as_u16();
    let charset = charset_of(
        response
            .headers()
            .get(reqwest::header::CONTENT_TYPE)
            .and_then(|v| v.to_str().ok()),
    );

    let mut body = Vec::new();
    let html = match response
        .take(policy.max_body_bytes as u64)
        .read_to_end(&mut body)
    {
        Ok(_) => Some(body),
        Err(e) => {
            notes.push(FetchNote::new("body", format!("body read failed: {e}")));
            if body.is_empty() {
                None
            } else {
                Some(body)
            }
        }
    };

    let cert_cn = if final_url.scheme() == "https" {
        let host = final_url.host_str().unwrap_or_default().to_string();
        let port = final_url.port_or_known_default().unwrap_or(443);
        match tls::fetch_leaf_cn(&host, port, policy.connect_timeout, policy.total_timeout) {
            Ok(Some(cn)) => Some(cn),
            Ok(None) => {
                notes.push(FetchNote::new(
                    "tls",
                    "leaf certificate subject has no common name",
                ));
                None
            }
            Err(e) => {
                notes.push(FetchNote::new("tls", format!("CN probe failed: {e}")));
                None
            }
        }
    } else {
        notes.push(FetchNote::new(
            "tls",
            "no TLS channel; certificate unavailable",
        ));
        None
    };

    Ok(PageSnapshot {
        requested_url: url.to_string(),
        final_url: final_url.to_string(),
        fetched_at: Utc::now(),
        status_code,
        cert_cn,
        cookie_domains,
        html,
        charset,
        fetch_errors: notes,
    })
}

/// Fetches many URLs with at most `parallelism` concurrent connections.
/// Output order matches input order; failures become error-only snapshots
/// and never abort the batch.
pub fn fetch_batch(urls: &[String], policy: &FetchPolicy, parallelism: usize) -> Vec<PageSnapshot> {
    let workers = parallelism.max(1).min(urls.len().max(1));
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<PageSnapshot>>> = Mutex::new(vec![None; urls.len()]);

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= urls.len() {
                    break;
                }
                let snap = fetch_snapshot(&urls[i], policy)
                    .unwrap_or_else(|e| PageSnapshot::from_error(&urls[i], &e));
                slots.lock().unwrap()[i] = Some(snap);
            });
        }
    });

    slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|s| s.expect("every slot filled"))
        .collect()
}
