//! `bdi` — brand-domain identification scanner and experiment runner.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{ArgAction, Args, Parser, Subcommand};

use bdi::domains::{load_suffix_rules, SuffixRules};
use bdi::encode::{
    build_dataset, read_feature_csv, write_feature_csv, FeatureName, Label, FEATURE_ORDER,
};
use bdi::extract::extract_all;
use bdi::learn::{
    sweep_combinations, train_decision_tree, train_naive_bayes, train_random_forest, ForestConfig,
    ModelKind, Protocol, SplitCriterion, TreeConfig,
};
use bdi::scanner::{demo_model, scan_snapshot, scan_with_keywords, ScanResult};
use bdi::select::rank_report_with;
use bdi::snapshot::{fetch_batch, load_snapshot, save_snapshot, FetchPolicy};
use bdi::synth::{generate, SynthConfig};

#[derive(Parser)]
#[command(
    name = "bdi",
    version,
    about = "Phishing detection through brand-domain identification features"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fetch one observation per URL and store snapshot files.
    Snapshot(SnapshotArgs),
    /// Extract features from snapshot files into a feature CSV.
    Extract(ExtractArgs),
    /// Rank the five features with four attribute evaluators.
    Rank(RankArgs),
    /// Train one classifier and save it as a model file.
    Train(TrainArgs),
    /// Evaluate a model's configuration under a protocol.
    Evaluate(EvaluateArgs),
    /// Evaluate every feature combination with every model.
    Sweep(SweepArgs),
    /// Scan a URL (or stored snapshot) and print a verdict.
    Scan(ScanArgs),
    /// Generate a synthetic labeled dataset.
    Synth(SynthArgs),
}

#[derive(Args)]
struct PolicyArgs {
    /// Total per-URL timeout in seconds.
    #[arg(long, default_value_t = 30.0)]
    timeout: f64,
    /// Connect timeout in seconds.
    #[arg(long, default_value_t = 10.0)]
    connect_timeout: f64,
    #[arg(long, default_value_t = 10)]
    max_redirects: usize,
    #[arg(long, default_value_t = 5 * 1024 * 1024)]
    max_body_bytes: usize,
    #[arg(long)]
    user_agent: Option<String>,
    /// Accept invalid TLS certificates (default on: the presented CN is
    /// evidence even on broken chains). Pass `--insecure-tls=false` to
    /// require valid certificates.
    #[arg(long, default_value_t = true, action = ArgAction::Set, num_args = 0..=1, default_missing_value = "true")]
    insecure_tls: bool,
}

impl PolicyArgs {
    fn to_policy(&self) -> FetchPolicy {
        let mut policy = FetchPolicy {
            connect_timeout: Duration::from_secs_f64(self.connect_timeout),
            total_timeout: Duration::from_secs_f64(self.timeout),
            max_redirects: self.max_redirects,
            max_body_bytes: self.max_body_bytes,
            verify_tls: !self.insecure_tls,
            ..FetchPolicy::default()
        };
        if let Some(ua) = &self.user_agent {
            policy.user_agent = ua.clone();
        }
        policy
    }
}

#[derive(Args)]
struct SnapshotArgs {
    /// URLs to observe.
    #[arg(required = true)]
    urls: Vec<String>,
    /// Output directory for snapshot JSON files.
    #[arg(long)]
    out: PathBuf,
    /// Concurrent connections.
    #[arg(long, default_value_t = 4)]
    parallel: usize,
    #[command(flatten)]
    policy: PolicyArgs,
}

#[derive(Args)]
struct ExtractArgs {
    /// A snapshot file or a directory of snapshot files.
    input: PathBuf,
    /// Public-suffix rule file; the bundled snapshot is used when omitted.
    #[arg(long)]
    psl: Option<PathBuf>,
    /// Label recorded for every extracted row: T (phishing) or F
    /// (legitimate).
    #[arg(long, value_parser = parse_label)]
    label: Label,
    /// Comma-separated logo keywords.
    #[arg(long, default_value = "logo", value_delimiter = ',')]
    logo_keywords: Vec<String>,
    /// Keep only rows with at least this many fetched feature values.
    #[arg(long, default_value_t = 3)]
    min_present: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RankArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 10)]
    relieff_k: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    /// rf, dt or nb.
    #[arg(long, value_parser = parse_kind)]
    model: ModelKind,
    /// Comma-separated feature names (FAD,LD,CN,MCLD,CD); all five when
    /// omitted.
    #[arg(long, value_delimiter = ',')]
    features: Option<Vec<String>>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Laplace smoothing for nb.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Tree count for rf.
    #[arg(long, default_value_t = 100)]
    trees: usize,
    #[arg(long)]
    max_depth: Option<u32>,
    #[arg(long, default_value_t = 1)]
    min_leaf: usize,
    /// entropy or gini.
    #[arg(long, default_value = "entropy", value_parser = parse_criterion)]
    criterion: SplitCriterion,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    model_file: PathBuf,
    /// cv<k> or holdout<percent>, e.g. cv10, holdout80.
    #[arg(long, value_parser = parse_protocol)]
    protocol: Protocol,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    data: PathBuf,
    /// Comma-separated model kinds.
    #[arg(long, default_value = "rf,dt,nb", value_delimiter = ',')]
    models: Vec<String>,
    #[arg(long, value_parser = parse_protocol)]
    protocol: Protocol,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// CSV output path.
    #[arg(long)]
    out: PathBuf,
    /// Optional JSON report path (timings zeroed, fully reproducible).
    #[arg(long)]
    json_out: Option<PathBuf>,
}

#[derive(Args)]
struct ScanArgs {
    /// URL to scan; omit when scanning a stored snapshot.
    url: Option<String>,
    /// Scan a stored snapshot file instead of fetching.
    #[arg(long, conflicts_with = "url")]
    snapshot: Option<PathBuf>,
    /// Model file; the bundled demo model is used when omitted.
    #[arg(long)]
    model_file: Option<PathBuf>,
    /// Public-suffix rule file; the bundled snapshot is used when omitted.
    #[arg(long)]
    psl: Option<PathBuf>,
    /// Print the full result as JSON.
    #[arg(long)]
    json: bool,
    #[arg(long, default_value = "logo", value_delimiter = ',')]
    logo_keywords: Vec<String>,
    #[command(flatten)]
    policy: PolicyArgs,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 10_000)]
    rows: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 0.5)]
    phish_fraction: f64,
    #[arg(long)]
    out: PathBuf,
}

fn parse_label(s: &str) -> Result<Label, String> {
    let mut chars = s.chars();
    match (chars.next().and_then(Label::from_code), chars.next()) {
        (Some(label), None) => Ok(label),
        _ => Err(format!("label must be T or F, got {s:?}")),
    }
}

fn parse_kind(s: &str) -> Result<ModelKind, String> {
    ModelKind::parse(s).ok_or_else(|| format!("unknown model kind {s:?} (use rf, dt or nb)"))
}

fn parse_protocol(s: &str) -> Result<Protocol, String> {
    Protocol::parse(s).ok_or_else(|| format!("unknown protocol {s:?} (use cv10, holdout80, ...)"))
}

fn parse_criterion(s: &str) -> Result<SplitCriterion, String> {
    match s.to_ascii_lowercase().as_str() {
        "entropy" => Ok(SplitCriterion::Entropy),
        "gini" => Ok(SplitCriterion::Gini),
        other => Err(format!("unknown criterion {other:?}")),
    }
}

fn load_rules(psl: &Option<PathBuf>) -> Result<SuffixRules> {
    match psl {
        Some(path) => load_suffix_rules(path)
            .with_context(|| format!("loading suffix rules from {}", path.display())),
        None => Ok(SuffixRules::bundled().clone()),
    }
}

fn parse_features(names: &Option<Vec<String>>) -> Result<Vec<FeatureName>> {
    match names {
        None => Ok(FEATURE_ORDER.to_vec()),
        Some(names) => {
            let mut subset = Vec::new();
            for name in names {
                let feature = FeatureName::parse(name)
                    .with_context(|| format!("unknown feature name {name:?}"))?;
                if !subset.contains(&feature) {
                    subset.push(feature);
                }
            }
            if subset.is_empty() {
                bail!("feature list is empty");
            }
            Ok(subset)
        }
    }
}

fn snapshot_paths(input: &Path) -> Result<Vec<PathBuf>> {
    if input.is_file() {
        return Ok(vec![input.to_path_buf()]);
    }
    let mut paths: Vec<PathBuf> = std::fs::read_dir(input)
        .with_context(|| format!("reading {}", input.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        bail!("no snapshot .json files under {}", input.display());
    }
    Ok(paths)
}

fn cmd_snapshot(args: SnapshotArgs) -> Result<()> {
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let policy = args.policy.to_policy();
    let snapshots = fetch_batch(&args.urls, &policy, args.parallel);
    for snap in &snapshots {
        let path = save_snapshot(snap, &args.out)?;
        let status = if snap.status_code == 0 {
            "failed".to_string()
        } else {
            snap.status_code.to_string()
        };
        println!("{}\t{}\t{}", snap.requested_url, status, path.display());
    }
    Ok(())
}

fn cmd_extract(args: ExtractArgs) -> Result<()> {
    let rules = load_rules(&args.psl)?;
    let mut rows = Vec::new();
    for path in snapshot_paths(&args.input)? {
        let snap = load_snapshot(&path)?;
        let ids = extract_all(&snap, &rules, &args.logo_keywords);
        let parts = bdi::domains::parse_url_domain(&snap.final_url, &rules)
            .with_context(|| format!("deriving page domain for {}", snap.final_url))?;
        rows.push(bdi::encode::encode_vector(
            &ids,
            &parts,
            Some(args.label),
            &snap.requested_url,
        ));
    }
    let total = rows.len();
    let ds = build_dataset(rows, args.min_present)?;
    write_feature_csv(&ds, &args.out)?;
    println!(
        "{} of {} snapshots kept (min_present={}) -> {}",
        ds.len(),
        total,
        args.min_present,
        args.out.display()
    );
    Ok(())
}

fn cmd_rank(args: RankArgs) -> Result<()> {
    let ds = read_feature_csv(&args.data)?;
    let report = rank_report_with(&ds, args.relieff_k, args.seed)?;
    let json = serde_json::to_string_pretty(&report)?;
    std::fs::write(&args.out, &json).with_context(|| format!("writing {}", args.out.display()))?;
    for ranking in &report {
        let ordered: Vec<String> = ranking
            .order
            .iter()
            .map(|name| format!("{name}={:.4}", ranking.scores[name]))
            .collect();
        println!("{:<12} {}", ranking.evaluator.name(), ordered.join("  "));
    }
    Ok(())
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let ds = read_feature_csv(&args.data)?;
    let subset = parse_features(&args.features)?;
    let tree_config = TreeConfig {
        max_depth: args.max_depth,
        min_leaf: args.min_leaf,
        criterion: args.criterion,
    };
    let model = match args.model {
        ModelKind::NaiveBayes => train_naive_bayes(&ds, &subset, args.alpha)?,
        ModelKind::DecisionTree => train_decision_tree(&ds, &subset, &tree_config)?,
        ModelKind::RandomForest => {
            let config = ForestConfig {
                n_trees: args.trees,
                tree: tree_config,
                ..ForestConfig::default()
            };
            train_random_forest(&ds, &subset, &config, args.seed)?
        }
    };
    bdi::learn::save_model(&model, &args.out)?;
    println!(
        "trained {} on {} records ({}) -> {}",
        model.kind,
        ds.len(),
        bdi::learn::subset_label(&model.feature_subset),
        args.out.display()
    );
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    let ds = read_feature_csv(&args.data)?;
    let model = bdi::learn::load_model(&args.model_file)?;
    let report = args
        .protocol
        .evaluate(&ds, model.kind, &model.feature_subset, args.seed)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let ds = read_feature_csv(&args.data)?;
    let mut kinds = Vec::new();
    for name in &args.models {
        kinds.push(parse_kind(name).map_err(anyhow::Error::msg)?);
    }
    let report = sweep_combinations(&ds, &kinds, args.protocol, args.seed)?;
    std::fs::write(&args.out, report.to_csv())
        .with_context(|| format!("writing {}", args.out.display()))?;
    if let Some(json_out) = &args.json_out {
        std::fs::write(json_out, report.canonical_json())
            .with_context(|| format!("writing {}", json_out.display()))?;
    }
    let best = report
        .rows
        .iter()
        .max_by(|a, b| a.best_accuracy.total_cmp(&b.best_accuracy))
        .expect("sweep has rows");
    println!(
        "31 subsets x {} models evaluated ({}); best: {} with {} at {:.4}",
        report.kinds.len(),
        report.protocol,
        bdi::learn::subset_label(&best.subset),
        best.best_model,
        best.best_accuracy
    );
    println!("full table -> {}", args.out.display());
    Ok(())
}

fn print_scan_result(result: &ScanResult, json: bool) -> Result<()> {
    if json {
        println!("{}", serde_json::to_string_pretty(result)?);
        return Ok(());
    }
    let verdict = match result.verdict {
        Label::Phishing => "PHISHING (T)",
        Label::Legitimate => "legitimate (F)",
    };
    println!("verdict: {verdict}   [model {}]", result.model_id);
    println!(
        "page domain: {} (root {})",
        result.parts.full_domain, result.parts.root_domain
    );
    for feature in FEATURE_ORDER {
        let evidence = &result.per_feature_explanation[feature.short_name()];
        println!(
            "  {:<5} {:>2}  {}",
            feature.short_name(),
            evidence.code.code(),
            evidence.identified.as_deref().unwrap_or("(absent)")
        );
    }
    if result.insufficient_evidence {
        println!("note: three or more features absent; verdict rests on thin evidence");
    }
    println!("elapsed: {:.3}s", result.elapsed);
    Ok(())
}

fn cmd_scan(args: ScanArgs) -> Result<ExitCode> {
    let rules = load_rules(&args.psl)?;
    let model = match &args.model_file {
        Some(path) => bdi::learn::load_model(path)?,
        None => demo_model(),
    };
    let result = match (&args.url, &args.snapshot) {
        (_, Some(path)) => {
            let snap = load_snapshot(path)?;
            scan_snapshot(&snap, &model, &rules)?
        }
        (Some(url), None) => scan_with_keywords(
            url,
            &model,
            &args.policy.to_policy(),
            &rules,
            &args.logo_keywords,
        )?,
        (None, None) => bail!("provide a URL or --snapshot <file>"),
    };
    print_scan_result(&result, args.json)?;
    Ok(match result.verdict {
        Label::Phishing => ExitCode::from(3),
        Label::Legitimate => ExitCode::SUCCESS,
    })
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let config = SynthConfig {
        rows: args.rows,
        phish_fraction: args.phish_fraction,
        ..SynthConfig::default()
    };
    let ds = generate(&config, args.seed);
    write_feature_csv(&ds, &args.out)?;
    println!("{} synthetic rows -> {}", ds.len(), args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Snapshot(args) => cmd_snapshot(args).map(|()| ExitCode::SUCCESS),
        Command::Extract(args) => cmd_extract(args).map(|()| ExitCode::SUCCESS),
        Command::Rank(args) => cmd_rank(args).map(|()| ExitCode::SUCCESS),
        Command::Train(args) => cmd_train(args).map(|()| ExitCode::SUCCESS),
        Command::Evaluate(args) => cmd_evaluate(args).map(|()| ExitCode::SUCCESS),
        Command::Sweep(args) => cmd_sweep(args).map(|()| ExitCode::SUCCESS),
        Command::Scan(args) => cmd_scan(args),
        Command::Synth(args) => cmd_synth(args).map(|()| ExitCode::SUCCESS),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
