//! `semcache`: generate traces, mine semantic patterns, replay caches and
//! compare reports.
//!
//! Every subcommand reads an optional `--config` file (TOML when the path
//! ends in `.toml`, JSON otherwise), then applies flag overrides on top.
//! Exit status: 0 on success, 1 for bad arguments or configuration, 2 when
//! the run itself fails.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use semcache_core::analysis::{ClusteringMethod, SurvivalRule};
use semcache_core::sim::{build_pipeline, compare_reports, read_report_csv, ComparisonRow};
use semcache_core::text::MemoEncoder;
use semcache_core::{
    analyze, corpus_stats, run_experiment, write_corpus, Algorithm, AnalysisConfig, AnalysisError, CorpusSource,
    EmbedderConfig, PolicySpec, Preset, RunConfig, RunError, SyntheticSpec, TraceError,
};

#[derive(Debug, Parser)]
#[command(name = "semcache", version, about = "Semantic cache analysis and trace-replay simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic conversation trace as JSONL.
    Gen(GenArgs),
    /// Summarize a corpus: rounds, token buckets, categories.
    Stats(StatsArgs),
    /// Mine per-round semantic patterns and write a pattern file.
    Analyze(AnalyzeArgs),
    /// Replay a corpus through one or more cache policies.
    Simulate(SimulateArgs),
    /// Relative change of one report over another.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// TOML or JSON config; flags override its values.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PresetArg {
    Lmsys,
    Moss,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::Lmsys => Preset::Lmsys,
            PresetArg::Moss => Preset::Moss,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AlgoArg {
    CoHsc,
    SeHsc,
}

impl From<AlgoArg> for Algorithm {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::CoHsc => Algorithm::CoHsc,
            AlgoArg::SeHsc => Algorithm::SeHsc,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Kmeans,
    Dbscan,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, Deserialize, Default, PartialEq)]
#[serde(rename_all = "kebab-case")]
enum Format {
    #[default]
    Json,
    Csv,
    Table,
}

/// Where the corpus comes from, as flags.
#[derive(Debug, Args)]
struct CorpusArgs {
    /// JSONL trace file.
    #[arg(long, value_name = "PATH", conflicts_with = "preset")]
    corpus: Option<PathBuf>,
    /// Generate a synthetic corpus in memory instead.
    #[arg(long, value_enum)]
    preset: Option<PresetArg>,
    /// Conversations to generate with `--preset`.
    #[arg(long, requires = "preset")]
    conversations: Option<usize>,
    #[arg(long, requires = "preset")]
    duplicate_rate: Option<f64>,
}

impl CorpusArgs {
    fn apply(&self, corpus: &mut CorpusSource) {
        if let Some(p) = &self.corpus {
            *corpus = CorpusSource::Path(p.clone());
        }
        if let Some(preset) = self.preset {
            *corpus = CorpusSource::Preset {
                preset: preset.into(),
                conversations: self.conversations.unwrap_or(1000),
                duplicate_rate: self.duplicate_rate,
                seed: None,
            };
        }
    }
}

#[derive(Debug, Args)]
struct AnalysisArgs {
    /// Patterns per round for CO-HSC.
    #[arg(long)]
    k: Option<usize>,
    /// Deepest round analyzed.
    #[arg(long)]
    rounds: Option<u32>,
    /// Token-saving-ratio threshold for extending an SE-HSC pattern.
    #[arg(long)]
    ts: Option<f64>,
    /// Proportion threshold for extending an SE-HSC pattern.
    #[arg(long)]
    te: Option<f64>,
    /// Round-1 pattern count for SE-HSC.
    #[arg(long)]
    tp: Option<usize>,
    /// Similarity at which two queries count as the same request.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// Literal survival rule: extend patterns below --ts that pass --te.
    #[arg(long)]
    literal_survival: bool,
    /// Embedding dimension of the local hashing embedder.
    #[arg(long)]
    embed_dim: Option<usize>,
    #[arg(long, value_name = "PATH")]
    stopwords: Option<PathBuf>,
}

impl AnalysisArgs {
    fn apply(&self, a: &mut AnalysisConfig, embedder: &mut EmbedderConfig, stopwords: &mut Option<PathBuf>) {
        set(&mut a.k, self.k);
        set(&mut a.max_rounds, self.rounds);
        set(&mut a.ts, self.ts);
        set(&mut a.te, self.te);
        set(&mut a.tp, self.tp);
        set(&mut a.similarity_threshold, self.threshold);
        match self.method {
            Some(MethodArg::Kmeans) if !matches!(a.clustering, ClusteringMethod::Kmeans { .. }) => {
                a.clustering = ClusteringMethod::default()
            }
            Some(MethodArg::Dbscan) if !matches!(a.clustering, ClusteringMethod::Dbscan { .. }) => {
                a.clustering = ClusteringMethod::Dbscan { eps: 0.10, min_pts: 3 }
            }
            _ => {}
        }
        if self.literal_survival {
            a.survival = SurvivalRule::Literal;
        }
        if let Some(d) = self.embed_dim {
            *embedder = EmbedderConfig::Hashing { dimension: d };
        }
        if self.stopwords.is_some() {
            stopwords.clone_from(&self.stopwords);
        }
    }
}

#[derive(Debug, Args)]
struct GenArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    preset: Option<PresetArg>,
    #[arg(long)]
    conversations: Option<usize>,
    #[arg(long)]
    duplicate_rate: Option<f64>,
    /// Output path; stdout when omitted.
    #[arg(short, long, value_name = "PATH")]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(short, long, value_name = "PATH")]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long, value_enum)]
    algo: Option<AlgoArg>,
    #[command(flatten)]
    analysis: AnalysisArgs,
    #[arg(short, long, value_name = "PATH")]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Conversations drawn per scale (comma separated for a sweep).
    #[arg(long, value_delimiter = ',')]
    sample_size: Vec<usize>,
    /// Share of each draw used for pattern analysis.
    #[arg(long)]
    split: Option<f64>,
    /// Cache capacities (comma separated for a sweep).
    #[arg(long, value_delimiter = ',')]
    cache_size: Vec<usize>,
    /// Policies: lfu, lru, co-hsc-lfu, se-hsc-lfu, sp-lfu.
    #[arg(long, value_delimiter = ',', value_parser = parse_policy)]
    policy: Vec<PolicySpec>,
    #[command(flatten)]
    analysis: AnalysisArgs,
    /// Report directory.
    #[arg(short, long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Skip the per-run event logs.
    #[arg(long)]
    no_events: bool,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    common: Common,
    /// Report CSV of the candidate.
    candidate: Option<PathBuf>,
    /// Report CSV of the baseline.
    baseline: Option<PathBuf>,
    #[arg(long)]
    candidate_policy: Option<String>,
    #[arg(long)]
    baseline_policy: Option<String>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(short, long, value_name = "PATH")]
    output: Option<PathBuf>,
}

fn parse_policy(s: &str) -> Result<PolicySpec, String> {
    PolicySpec::parse(s).ok_or_else(|| format!("unknown policy {s:?}"))
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn default_preset() -> Preset {
    Preset::Lmsys
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct GenConfig {
    preset: Preset,
    /// A full spec; replaces the preset when given.
    spec: Option<SyntheticSpec>,
    conversations: Option<usize>,
    duplicate_rate: Option<f64>,
    seed: u64,
    output: Option<PathBuf>,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            preset: default_preset(),
            spec: None,
            conversations: None,
            duplicate_rate: None,
            seed: 0,
            output: None,
        }
    }
}

fn default_corpus() -> CorpusSource {
    RunConfig::default().corpus
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct StatsConfig {
    corpus: CorpusSource,
    seed: u64,
    format: Format,
    output: Option<PathBuf>,
}

impl Default for StatsConfig {
    fn default() -> Self {
        Self {
            corpus: default_corpus(),
            seed: 0,
            format: Format::Json,
            output: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct AnalyzeConfig {
    corpus: CorpusSource,
    algorithm: Algorithm,
    analysis: AnalysisConfig,
    embedder: EmbedderConfig,
    stopwords: Option<PathBuf>,
    output: Option<PathBuf>,
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        Self {
            corpus: default_corpus(),
            algorithm: Algorithm::CoHsc,
            analysis: AnalysisConfig::default(),
            embedder: EmbedderConfig::default(),
            stopwords: None,
            output: None,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct CompareConfig {
    candidate: Option<PathBuf>,
    baseline: Option<PathBuf>,
    candidate_policy: Option<String>,
    baseline_policy: Option<String>,
    format: Option<Format>,
    output: Option<PathBuf>,
}

/// Exit status classes.
#[derive(Debug)]
enum Failure {
    /// Bad arguments or configuration.
    Invalid(anyhow::Error),
    /// The command was well formed but failed while running.
    Runtime(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }
}

fn invalid(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Invalid(e.into())
}

fn runtime(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Runtime(e.into())
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        match e {
            RunError::InvalidConfig(_) | RunError::Trace(TraceError::InvalidSpec(_)) => invalid(e),
            RunError::Analysis(AnalysisError::InvalidConfig(_)) => invalid(e),
            _ => runtime(e),
        }
    }
}

impl From<AnalysisError> for Failure {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::InvalidConfig(_) => invalid(e),
            _ => runtime(e),
        }
    }
}

impl From<TraceError> for Failure {
    fn from(e: TraceError) -> Self {
        match e {
            TraceError::InvalidSpec(_) => invalid(e),
            _ => runtime(e),
        }
    }
}

type Outcome = Result<(), Failure>;

fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, Failure> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))
        .map_err(invalid)?;
    let parsed = if path.extension().is_some_and(|e| e == "toml") {
        toml::from_str(&text).map_err(anyhow::Error::from)
    } else {
        serde_json::from_str(&text).map_err(anyhow::Error::from)
    };
    parsed
        .with_context(|| format!("config {}", path.display()))
        .map_err(invalid)
}

/// Writes to `path`, or stdout when there is none.
fn emit(path: Option<&Path>, body: &[u8]) -> Outcome {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)
                    .with_context(|| format!("creating {}", dir.display()))
                    .map_err(runtime)?;
            }
            fs::write(p, body)
                .with_context(|| format!("writing {}", p.display()))
                .map_err(runtime)
        }
        None => io::stdout().write_all(body).context("writing stdout").map_err(runtime),
    }
}

fn cmd_gen(args: GenArgs) -> Outcome {
    let mut cfg: GenConfig = load_config(args.common.config.as_deref())?;
    if let Some(p) = args.preset {
        cfg.preset = p.into();
        cfg.spec = None;
    }
    set(&mut cfg.seed, args.common.seed);
    if args.conversations.is_some() {
        cfg.conversations = args.conversations;
    }
    if args.duplicate_rate.is_some() {
        cfg.duplicate_rate = args.duplicate_rate;
    }
    if args.output.is_some() {
        cfg.output = args.output;
    }
    let mut spec = cfg.spec.clone().unwrap_or_else(|| cfg.preset.spec(1000));
    set(&mut spec.conversations, cfg.conversations);
    set(&mut spec.duplicate_rate, cfg.duplicate_rate);
    spec.validate()?;
    let corpus = semcache_core::generate_synthetic(&spec, cfg.seed)?;
    let mut body = Vec::new();
    write_corpus(&corpus, &mut body).map_err(runtime)?;
    emit(cfg.output.as_deref(), &body)?;
    eprintln!(
        "generated {} conversations, {} queries (seed {})",
        corpus.len(),
        corpus.total_queries(),
        cfg.seed
    );
    Ok(())
}

fn cmd_stats(args: StatsArgs) -> Outcome {
    let mut cfg: StatsConfig = load_config(args.common.config.as_deref())?;
    args.corpus.apply(&mut cfg.corpus);
    set(&mut cfg.seed, args.common.seed);
    set(&mut cfg.format, args.format);
    if args.output.is_some() {
        cfg.output = args.output;
    }
    let corpus = cfg.corpus.load(cfg.seed)?;
    let report = corpus_stats(&corpus)?;
    let body = match cfg.format {
        Format::Json => {
            let mut s = report.to_json_pretty();
            s.push('\n');
            s.into_bytes()
        }
        Format::Csv => {
            let mut buf = Vec::new();
            report.write_csv(&mut buf).map_err(runtime)?;
            buf
        }
        Format::Table => stats_table(&report).into_bytes(),
    };
    emit(cfg.output.as_deref(), &body)
}

fn stats_table(r: &semcache_core::StatsReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "conversations      {}", r.conversations);
    let _ = writeln!(s, "queries            {}", r.queries);
    let _ = writeln!(s, "mean rounds        {:.2}", r.mean_rounds);
    let _ = writeln!(s, "mean query tokens  {:.1}", r.mean_query_tokens);
    let _ = writeln!(s, "mean answer tokens {:.1}", r.mean_answer_tokens);
    let _ = writeln!(s, "pair tokens:");
    for b in &r.pair_token_buckets {
        let _ = writeln!(s, "  {:<12} {:>7} {:>6.2}%", b.label(), b.count, b.percent);
    }
    s
}

fn cmd_analyze(args: AnalyzeArgs) -> Outcome {
    let mut cfg: AnalyzeConfig = load_config(args.common.config.as_deref())?;
    args.corpus.apply(&mut cfg.corpus);
    if let Some(a) = args.algo {
        cfg.algorithm = a.into();
    }
    args.analysis
        .apply(&mut cfg.analysis, &mut cfg.embedder, &mut cfg.stopwords);
    set(&mut cfg.analysis.seed, args.common.seed);
    if args.output.is_some() {
        cfg.output = args.output;
    }
    cfg.analysis.validate()?;
    let corpus = cfg.corpus.load(cfg.analysis.seed)?;
    let pipeline = build_pipeline(&cfg.embedder, cfg.stopwords.as_deref())?;
    let encoder = MemoEncoder::new(&pipeline);
    let set = analyze(cfg.algorithm, &corpus, &encoder, &cfg.analysis)?;
    let mut body = set.to_json();
    body.push('\n');
    emit(cfg.output.as_deref(), body.as_bytes())?;
    let per_round: Vec<String> = set.rounds.iter().map(|r| r.len().to_string()).collect();
    eprintln!(
        "{}: {} patterns over {} rounds ({})",
        cfg.algorithm.as_str(),
        set.patterns().count(),
        set.rounds.len(),
        per_round.join("/")
    );
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Outcome {
    let mut cfg: RunConfig = load_config(args.common.config.as_deref())?;
    args.corpus.apply(&mut cfg.corpus);
    set(&mut cfg.seed, args.common.seed);
    if !args.sample_size.is_empty() {
        cfg.sample_sizes = args.sample_size;
    }
    set(&mut cfg.split, args.split);
    if !args.cache_size.is_empty() {
        cfg.cache_sizes = args.cache_size;
    }
    if !args.policy.is_empty() {
        cfg.policies = args.policy;
    }
    args.analysis
        .apply(&mut cfg.analysis, &mut cfg.embedder, &mut cfg.stopwords);
    if let Some(t) = args.analysis.threshold {
        cfg.cache.similarity_threshold = t;
    }
    if args.out.is_some() {
        cfg.output_dir = args.out;
    }
    if args.no_events {
        cfg.write_events = false;
    }
    let result = run_experiment(&cfg)?;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<12} {:>6} {:>6} {:>8} {:>6} {:>9} {:>9}",
        "policy", "convs", "cache", "queries", "hits", "hit", "tsr"
    );
    let pct = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{:.3}%", v * 100.0));
    for row in &result.rows {
        let _ = writeln!(
            s,
            "{:<12} {:>6} {:>6} {:>8} {:>6} {:>9} {:>9}",
            row.policy.as_str(),
            row.conversations,
            row.cache_size,
            row.metrics.totals.queries,
            row.metrics.totals.hits,
            pct(row.metrics.hit_ratio),
            pct(row.metrics.token_saving_ratio)
        );
    }
    emit(None, s.as_bytes())?;
    match &cfg.output_dir {
        Some(d) => eprintln!("run {} written to {} in {} ms", result.run_id, d.display(), result.duration_ms),
        None => eprintln!("run {} finished in {} ms", result.run_id, result.duration_ms),
    }
    Ok(())
}

fn read_rows(path: &Path) -> Result<Vec<semcache_core::sim::ReportRow>, Failure> {
    let file = fs::File::open(path)
        .with_context(|| format!("opening {}", path.display()))
        .map_err(runtime)?;
    read_report_csv(file)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(runtime)
}

fn comparison_table(rows: &[ComparisonRow]) -> String {
    let pct = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{:.3}%", v * 100.0));
    let change = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:+.1}%"));
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:>6} {:>6}  {:<12} {:<12} {:>9} {:>9} {:>8}  {:>9} {:>9} {:>8}",
        "convs", "cache", "candidate", "baseline", "hit", "base hit", "change", "tsr", "base tsr", "change"
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{:>6} {:>6}  {:<12} {:<12} {:>9} {:>9} {:>8}  {:>9} {:>9} {:>8}",
            r.conversations,
            r.cache_size,
            r.candidate_policy,
            r.baseline_policy,
            pct(r.candidate_hit_ratio),
            pct(r.baseline_hit_ratio),
            change(r.hit_ratio_change_pct),
            pct(r.candidate_token_saving_ratio),
            pct(r.baseline_token_saving_ratio),
            change(r.token_saving_change_pct)
        );
    }
    s
}

fn cmd_compare(args: CompareArgs) -> Outcome {
    // the seed is accepted for a uniform interface; comparison is pure
    let _ = args.common.seed;
    let mut cfg: CompareConfig = load_config(args.common.config.as_deref())?;
    for (slot, v) in [
        (&mut cfg.candidate, args.candidate),
        (&mut cfg.baseline, args.baseline),
        (&mut cfg.output, args.output),
    ] {
        if v.is_some() {
            *slot = v;
        }
    }
    for (slot, v) in [
        (&mut cfg.candidate_policy, args.candidate_policy),
        (&mut cfg.baseline_policy, args.baseline_policy),
    ] {
        if v.is_some() {
            *slot = v;
        }
    }
    if args.format.is_some() {
        cfg.format = args.format;
    }
    let (Some(cand_path), Some(base_path)) = (&cfg.candidate, &cfg.baseline) else {
        return Err(invalid(anyhow!("compare needs a candidate and a baseline report")));
    };
    let cand = read_rows(cand_path)?;
    let base = read_rows(base_path)?;
    let rows = compare_reports(
        &cand,
        &base,
        cfg.candidate_policy.as_deref(),
        cfg.baseline_policy.as_deref(),
    )
    .map_err(|e| invalid(anyhow!(e)))?;
    let body = match cfg.format.unwrap_or(Format::Table) {
        Format::Table => comparison_table(&rows).into_bytes(),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&rows).map_err(runtime)?;
            s.push('\n');
            s.into_bytes()
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in &rows {
                w.serialize(r).map_err(runtime)?;
            }
            w.into_inner().map_err(|e| runtime(anyhow!(e.to_string())))?
        }
    };
    emit(cfg.output.as_deref(), &body)
}

/// The error chain on one line, skipping causes an outer message already
/// spells out.
fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if out.contains(&text) {
            continue;
        }
        if !out.is_empty() {
            out.push_str(": ");
        }
        out.push_str(&text);
    }
    out
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Stats(a) => cmd_stats(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Compare(a) => cmd_compare(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let code = f.code();
            let (Failure::Invalid(e) | Failure::Runtime(e)) = f;
            eprintln!("error: {}", describe(&e));
            ExitCode::from(code)
        }
    }
}
