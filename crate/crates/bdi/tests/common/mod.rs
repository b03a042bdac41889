//! Shared test support: independent oracle implementations, stub HTTP and
//! TLS servers, and snapshot fixture builders.
#![allow(dead_code)]

use std::collections::HashMap;
use std::io::{Read, Write};
use std::net::{SocketAddr, TcpListener};
use std::sync::Arc;

use bdi::encode::{build_dataset, Dataset, FeatureVector, Label, Ternary};
use bdi::snapshot::PageSnapshot;

// ---------------------------------------------------------------------------
// Dataset helpers
// ---------------------------------------------------------------------------

pub fn dataset_from_codes(rows: &[([i8; 5], Label)]) -> Dataset {
    let records = rows
        .iter()
        .enumerate()
        .map(|(i, (codes, label))| {
            let values = codes.map(|c| Ternary::from_code(c).unwrap());
            FeatureVector::from_values(values, Some(*label), &format!("row://{i}"))
        })
        .collect();
    build_dataset(records, 0).unwrap()
}

pub fn offline_snapshot(
    final_url: &str,
    cert_cn: Option<&str>,
    cookies: &[&str],
    html: Option<&str>,
) -> PageSnapshot {
    PageSnapshot {
        requested_url: final_url.to_string(),
        final_url: final_url.to_string(),
        fetched_at: "2025-01-05T12:00:00Z".parse().unwrap(),
        status_code: 200,
        cert_cn: cert_cn.map(str::to_string),
        cookie_domains: cookies.iter().map(|s| s.to_string()).collect(),
        html: html.map(|h| h.as_bytes().to_vec()),
        charset: Some("utf-8".into()),
        fetch_errors: vec![],
    }
}

// ---------------------------------------------------------------------------
// Independent metric and evaluator oracles
// ---------------------------------------------------------------------------

pub mod oracle {
    use bdi::encode::{Dataset, Label, Ternary};

    /// Direct recomputation of the six metrics from raw counts.
    pub struct DirectMetrics {
        pub tpr: f64,
        pub fpr: f64,
        pub precision: f64,
        pub recall: f64,
        pub f_measure: f64,
        pub accuracy: f64,
    }

    pub fn direct_metrics(tp: u64, fn_: u64, tn: u64, fp: u64) -> DirectMetrics {
        let (tp, fn_, tn, fp) = (tp as f64, fn_ as f64, tn as f64, fp as f64);
        let safe = |num: f64, den: f64| if den == 0.0 { 0.0 } else { num / den };
        let tpr = safe(tp, tp + fn_);
        let recall = safe(tp, tp + fn_);
        let precision = safe(tp, tp + fp);
        DirectMetrics {
            tpr,
            fpr: safe(fp, fp + tn),
            precision,
            recall,
            f_measure: safe(2.0 * precision * recall, precision + recall),
            accuracy: (tp + tn) / (tp + tn + fp + fn_),
        }
    }

    fn columns(ds: &Dataset) -> (Vec<[i8; 5]>, Vec<u8>) {
        let features = ds
            .records
            .iter()
            .map(|r| r.values().map(Ternary::code))
            .collect();
        let classes = ds
            .records
            .iter()
            .map(|r| match r.label.unwrap() {
                Label::Legitimate => 0u8,
                Label::Phishing => 1u8,
            })
            .collect();
        (features, classes)
    }

    /// Pearson correlation straight from the definition.
    pub fn correlation_direct(ds: &Dataset, feature: usize) -> f64 {
        let (features, classes) = columns(ds);
        let n = features.len() as f64;
        let xs: Vec<f64> = features.iter().map(|row| row[feature] as f64).collect();
        let ys: Vec<f64> = classes.iter().map(|&c| c as f64).collect();
        let mean_x = xs.iter().sum::<f64>() / n;
        let mean_y = ys.iter().sum::<f64>() / n;
        let cov: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (x - mean_x) * (y - mean_y))
            .sum();
        let sx: f64 = xs.iter().map(|x| (x - mean_x).powi(2)).sum::<f64>().sqrt();
        let sy: f64 = ys.iter().map(|y| (y - mean_y).powi(2)).sum::<f64>().sqrt();
        if sx == 0.0 || sy == 0.0 {
            0.0
        } else {
            (cov / (sx * sy)).abs()
        }
    }

    fn entropy_of(probabilities: impl Iterator<Item = f64>) -> f64 {
        probabilities
            .filter(|p| *p > 0.0)
            .map(|p| -p * p.log2())
            .sum()
    }

    /// Information gain by brute-force enumeration over the joint table.
    pub fn info_gain_direct(ds: &Dataset, feature: usize) -> f64 {
        let (features, classes) = columns(ds);
        let n = features.len() as f64;
        let p_phish = classes.iter().filter(|&&c| c == 1).count() as f64 / n;
        let h_class = entropy_of([p_phish, 1.0 - p_phish].into_iter());

        let mut conditional = 0.0;
        for value in [-1i8, 0, 1] {
            let members: Vec<usize> = (0..features.len())
                .filter(|&i| features[i][feature] == value)
                .collect();
            if members.is_empty() {
                continue;
            }
            let nv = members.len() as f64;
            let phish = members.iter().filter(|&&i| classes[i] == 1).count() as f64;
            conditional += (nv / n) * entropy_of([phish / nv, 1.0 - phish / nv].into_iter());
        }
        h_class - conditional
    }

    pub fn split_info_direct(ds: &Dataset, feature: usize) -> f64 {
        let (features, _) = columns(ds);
        let n = features.len() as f64;
        entropy_of(
            [-1i8, 0, 1].into_iter().map(|value| {
                features.iter().filter(|row| row[feature] == value).count() as f64 / n
            }),
        )
    }

    pub fn gain_ratio_direct(ds: &Dataset, feature: usize) -> f64 {
        let split = split_info_direct(ds, feature);
        if split == 0.0 {
            0.0
        } else {
            info_gain_direct(ds, feature) / split
        }
    }

    /// ReliefF with exhaustive neighbor search: all pairwise distances,
    /// full sort, then the standard clamped-neighbor update rule.
    pub fn relieff_exhaustive(ds: &Dataset, k: usize) -> [f64; 5] {
        let (features, classes) = columns(ds);
        let n = features.len();
        let m = n as f64;
        let n_phish = classes.iter().filter(|&&c| c == 1).count() as f64;
        let priors = [(n as f64 - n_phish) / n as f64, n_phish / n as f64];

        let mut weights = [0.0f64; 5];
        for i in 0..n {
            let own = classes[i] as usize;
            let other = 1 - own;
            let mut neighbors: Vec<(usize, usize, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let dist = (0..5).filter(|&f| features[i][f] != features[j][f]).count();
                    (dist, j, classes[j] as usize)
                })
                .collect();
            neighbors.sort();

            let hits: Vec<usize> = neighbors
                .iter()
                .filter(|(_, _, c)| *c == own)
                .map(|(_, j, _)| *j)
                .collect();
            let misses: Vec<usize> = neighbors
                .iter()
                .filter(|(_, _, c)| *c == other)
                .map(|(_, j, _)| *j)
                .collect();
            let k_hit = k.min(hits.len());
            let k_miss = k.min(misses.len());
            let miss_weight = priors[other] / (1.0 - priors[own]);

            for f in 0..5 {
                if k_hit > 0 {
                    let diffs: f64 = hits[..k_hit]
                        .iter()
                        .filter(|&&j| features[i][f] != features[j][f])
                        .count() as f64;
                    weights[f] -= diffs / (k_hit as f64 * m);
                }
                if k_miss > 0 {
                    let diffs: f64 = misses[..k_miss]
                        .iter()
                        .filter(|&&j| features[i][f] != features[j][f])
                        .count() as f64;
                    weights[f] += miss_weight * diffs / (k_miss as f64 * m);
                }
            }
        }
        weights
    }

    /// Exact accuracy of the Bayes-optimal classifier for `n_features`
    /// i.i.d. ternary features, by enumerating every value combination.
    pub fn bayes_optimal_accuracy(
        n_features: usize,
        legit: [f64; 3],
        phish: [f64; 3],
        prior_phish: f64,
    ) -> f64 {
        let mut accuracy = 0.0;
        let combos = 3usize.pow(n_features as u32);
        for combo in 0..combos {
            let mut p_legit = 1.0 - prior_phish;
            let mut p_phish = prior_phish;
            let mut c = combo;
            for _ in 0..n_features {
                let value = c % 3;
                c /= 3;
                p_legit *= legit[value];
                p_phish *= phish[value];
            }
            accuracy += p_legit.max(p_phish);
        }
        accuracy
    }
}

// ---------------------------------------------------------------------------
// Stub servers
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct StubResponse {
    pub status: u16,
    pub headers: Vec<(String, String)>,
    pub body: Vec<u8>,
}

impl StubResponse {
    pub fn html(body: &str) -> Self {
        StubResponse {
            status: 200,
            headers: vec![(
                "Content-Type".to_string(),
                "text/html; charset=utf-8".to_string(),
            )],
            body: body.as_bytes().to_vec(),
        }
    }

    pub fn redirect(location: &str) -> Self {
        StubResponse {
            status: 302,
            headers: vec![("Location".to_string(), location.to_string())],
            body: Vec::new(),
        }
    }

    pub fn with_header(mut self, name: &str, value: &str) -> Self {
        self.headers.push((name.to_string(), value.to_string()));
        self
    }

    fn render(&self) -> Vec<u8> {
        let mut out = format!("HTTP/1.1 {} X\r\n", self.status).into_bytes();
        for (name, value) in &self.headers {
            out.extend_from_slice(format!("{name}: {value}\r\n").as_bytes());
        }
        out.extend_from_slice(format!("Content-Length: {}\r\n", self.body.len()).as_bytes());
        out.extend_from_slice(b"Connection: close\r\n\r\n");
        out.extend_from_slice(&self.body);
        out
    }
}

fn request_path(stream: &mut impl Read) -> Option<String> {
    let mut buf = Vec::new();
    let mut byte = [0u8; 1];
    while !buf.ends_with(b"\r\n\r\n") && buf.len() < 65536 {
        match stream.read(&mut byte) {
            Ok(1) => buf.push(byte[0]),
            _ => break,
        }
    }
    let text = String::from_utf8_lossy(&buf);
    let first = text.lines().next()?;
    first.split_whitespace().nth(1).map(str::to_string)
}

/// Serves fixed routes over plain HTTP on an ephemeral port. The server
/// thread lives until the test process exits.
pub fn start_http_server(routes: HashMap<String, StubResponse>) -> SocketAddr {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let routes = routes.clone();
            std::thread::spawn(move || {
                if let Some(path) = request_path(&mut stream) {
                    let response = routes.get(&path).cloned().unwrap_or(StubResponse {
                        status: 404,
                        headers: vec![],
                        body: b"not found".to_vec(),
                    });
                    let _ = stream.write_all(&response.render());
                    let _ = stream.flush();
                }
            });
        }
    });
    addr
}

/// Serves fixed routes over TLS with a freshly generated self-signed
/// certificate whose subject CN is `common_name`.
pub fn start_tls_server(common_name: &str, routes: HashMap<String, StubResponse>) -> SocketAddr {
    let mut params = rcgen::CertificateParams::new(vec!["localhost".to_string()]).unwrap();
    params
        .distinguished_name
        .push(rcgen::DnType::CommonName, common_name);
    let key_pair = rcgen::KeyPair::generate().unwrap();
    let cert = params.self_signed(&key_pair).unwrap();

    let certs = vec![cert.der().clone()];
    let key = rustls::pki_types::PrivateKeyDer::Pkcs8(key_pair.serialize_der().into());
    let config = rustls::ServerConfig::builder()
        .with_no_client_auth()
        .with_single_cert(certs, key)
        .unwrap();
    let config = Arc::new(config);

    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut tcp) = stream else { continue };
            let config = config.clone();
            let routes = routes.clone();
            std::thread::spawn(move || {
                let Ok(conn) = rustls::ServerConnection::new(config) else {
                    return;
                };
                let mut tls = rustls::StreamOwned::new(conn, &mut tcp);
                // The CN probe closes right after the handshake; serving a
                // route only happens when a request actually arrives.
                if let Some(path) = request_path(&mut tls) {
                    let response = routes.get(&path).cloned().unwrap_or(StubResponse {
                        status: 404,
                        headers: vec![],
                        body: b"not found".to_vec(),
                    });
                    let _ = tls.write_all(&response.render());
                    let _ = tls.flush();
                }
                tls.conn.send_close_notify();
                let _ = tls.flush();
            });
        }
    });
    addr
}
