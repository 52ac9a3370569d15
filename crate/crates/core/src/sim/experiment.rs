use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::replay;
use super::report::{write_report_csv, ReportRow};
use crate::analysis::{analyze, Algorithm, AnalysisConfig, AnalysisError, PatternSet};
use crate::cache::{Admission, CacheConfig, CacheError, Policy, SemanticCache};
use crate::metrics::{MetricsLedger, MetricsSummary};
use crate::synthetic::{generate_synthetic, SyntheticSpec};
use crate::text::{Embedder, HashingEmbedder, MemoEncoder, RemoteEmbedder, RemoteEmbedderConfig, StopWords, TextPipeline};
use crate::trace::{load_corpus, TraceCorpus, TraceError};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid run config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Cache(#[from] CacheError),
    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("report error: {0}")]
    Report(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Lmsys,
    Moss,
}

impl Preset {
    pub fn spec(self, conversations: usize) -> SyntheticSpec {
        match self {
            Preset::Lmsys => SyntheticSpec::lmsys_like(conversations),
            Preset::Moss => SyntheticSpec::moss_like(conversations),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum CorpusSource {
    /// A JSONL trace file.
    Path(PathBuf),
    /// A synthetic preset, generated with the run seed unless `seed` is set.
    Preset {
        preset: Preset,
        conversations: usize,
        #[serde(default)]
        duplicate_rate: Option<f64>,
        #[serde(default)]
        seed: Option<u64>,
    },
    /// A fully specified synthetic corpus.
    Synthetic {
        spec: SyntheticSpec,
        #[serde(default)]
        seed: Option<u64>,
    },
}

impl CorpusSource {
    pub fn load(&self, run_seed: u64) -> Result<TraceCorpus, RunError> {
        match self {
            CorpusSource::Path(p) => load_corpus(p).map_err(|e| match e {
                TraceError::Io(source) => RunError::Io { path: p.clone(), source },
                e => e.into(),
            }),
            CorpusSource::Preset {
                preset,
                conversations,
                duplicate_rate,
                seed,
            } => {
                let mut spec = preset.spec(*conversations);
                if let Some(d) = duplicate_rate {
                    spec.duplicate_rate = *d;
                }
                Ok(generate_synthetic(&spec, seed.unwrap_or(run_seed))?)
            }
            CorpusSource::Synthetic { spec, seed } => Ok(generate_synthetic(spec, seed.unwrap_or(run_seed))?),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EmbedderConfig {
    /// Local feature-hashing embedder.
    Hashing {
        #[serde(default = "default_dimension")]
        dimension: usize,
    },
    /// HTTP embedding endpoint.
    Remote(RemoteEmbedderConfig),
}

fn default_dimension() -> usize {
    crate::text::embed::DEFAULT_DIMENSION
}

impl Default for EmbedderConfig {
    fn default() -> Self {
        EmbedderConfig::Hashing {
            dimension: default_dimension(),
        }
    }
}

/// Preprocessing plus the configured embedder. `stopwords` replaces the
/// built-in English list when given.
pub fn build_pipeline(embedder: &EmbedderConfig, stopwords: Option<&Path>) -> Result<TextPipeline, RunError> {
    let stop = match stopwords {
        Some(p) => StopWords::from_file(p).map_err(io_err(p))?,
        None => StopWords::english(),
    };
    let e: Arc<dyn Embedder> = match embedder {
        EmbedderConfig::Hashing { dimension } => {
            if *dimension == 0 {
                return Err(RunError::InvalidConfig("embedder.dimension must be positive".into()));
            }
            Arc::new(HashingEmbedder::new(*dimension))
        }
        EmbedderConfig::Remote(cfg) => Arc::new(RemoteEmbedder::new(cfg.clone())),
    };
    Ok(TextPipeline::new(stop, e))
}

/// A cache policy under comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicySpec {
    Lfu,
    Lru,
    /// Priority eviction with admission ranked by comprehensive-hierarchy patterns.
    CoHscLfu,
    /// Priority eviction with admission ranked by selective-hierarchy patterns.
    SeHscLfu,
    /// Priority eviction without patterns: stores everything.
    SpLfu,
}

impl PolicySpec {
    pub fn as_str(self) -> &'static str {
        match self {
            PolicySpec::Lfu => "lfu",
            PolicySpec::Lru => "lru",
            PolicySpec::CoHscLfu => "co-hsc-lfu",
            PolicySpec::SeHscLfu => "se-hsc-lfu",
            PolicySpec::SpLfu => "sp-lfu",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Self::Lfu, Self::Lru, Self::CoHscLfu, Self::SeHscLfu, Self::SpLfu]
            .into_iter()
            .find(|p| p.as_str() == s)
    }

    pub fn algorithm(self) -> Option<Algorithm> {
        match self {
            PolicySpec::CoHscLfu => Some(Algorithm::CoHsc),
            PolicySpec::SeHscLfu => Some(Algorithm::SeHsc),
            _ => None,
        }
    }

    fn cache_policy(self) -> (Policy, Admission) {
        match self {
            PolicySpec::Lfu => (Policy::Lfu, Admission::StoreAll),
            PolicySpec::Lru => (Policy::Lru, Admission::StoreAll),
            PolicySpec::SpLfu => (Policy::SpLfu, Admission::StoreAll),
            PolicySpec::CoHscLfu | PolicySpec::SeHscLfu => (Policy::SpLfu, Admission::Ranked),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: CorpusSource,
    /// Conversations drawn per scale; each draw is split into an analysis
    /// part and an evaluation part.
    pub sample_sizes: Vec<usize>,
    /// Share of each draw used for pattern analysis.
    pub split: f64,
    pub seed: u64,
    /// `capacity` is used when `cache_sizes` is empty; `policy` is set per run.
    pub cache: CacheConfig,
    pub cache_sizes: Vec<usize>,
    pub analysis: AnalysisConfig,
    pub policies: Vec<PolicySpec>,
    pub embedder: EmbedderConfig,
    pub stopwords: Option<PathBuf>,
    /// Reports are written here when set.
    pub output_dir: Option<PathBuf>,
    /// Also write one JSONL event log per run.
    pub write_events: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            corpus: CorpusSource::Preset {
                preset: Preset::Lmsys,
                conversations: 1000,
                duplicate_rate: None,
                seed: None,
            },
            sample_sizes: vec![1000],
            split: 0.5,
            seed: 0,
            cache: CacheConfig::default(),
            cache_sizes: Vec::new(),
            analysis: AnalysisConfig::default(),
            policies: vec![PolicySpec::Lfu, PolicySpec::Lru, PolicySpec::CoHscLfu, PolicySpec::SeHscLfu],
            embedder: EmbedderConfig::default(),
            stopwords: None,
            output_dir: None,
            write_events: true,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), RunError> {
        let bad = |m: String| Err(RunError::InvalidConfig(m));
        if self.sample_sizes.is_empty() || self.sample_sizes.contains(&0) {
            return bad("sample_sizes must be non-empty and positive".into());
        }
        if !(self.split > 0.0 && self.split < 1.0) {
            return bad(format!("split = {} must lie in (0, 1)", self.split));
        }
        if self.policies.is_empty() {
            return bad("policies must not be empty".into());
        }
        if self.cache_sizes.contains(&0) {
            return bad("cache_sizes must be positive".into());
        }
        self.cache
            .validate()
            .map_err(|e| RunError::InvalidConfig(format!("cache: {e}")))?;
        self.analysis
            .validate()
            .map_err(|e| RunError::InvalidConfig(format!("analysis: {e}")))?;
        Ok(())
    }

    pub fn effective_cache_sizes(&self) -> Vec<usize> {
        if self.cache_sizes.is_empty() {
            vec![self.cache.capacity]
        } else {
            self.cache_sizes.clone()
        }
    }

    /// Content hash of everything that affects results.
    pub fn run_id(&self) -> String {
        let mut c = self.clone();
        c.output_dir = None;
        c.write_events = false;
        let json = serde_json::to_string(&c).expect("run config serializes");
        hex::encode(&Sha256::digest(json.as_bytes())[..8])
    }
}

/// Indices into the full corpus for one draw.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleSplit {
    pub analysis: Vec<usize>,
    pub evaluation: Vec<usize>,
}

/// Draws `n` conversations without replacement in seeded random order; the
/// first `ceil(split * n)` form the analysis part. Draws of different sizes
/// with the same seed are nested.
pub fn sample_split(corpus_len: usize, n: usize, split: f64, seed: u64) -> Result<SampleSplit, RunError> {
    if n > corpus_len {
        return Err(RunError::InvalidConfig(format!(
            "sample size {n} exceeds the corpus's {corpus_len} conversations"
        )));
    }
    let mut order: Vec<usize> = (0..corpus_len).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    order.truncate(n);
    let cut = ((split * n as f64).ceil() as usize).min(n);
    let evaluation = order.split_off(cut);
    Ok(SampleSplit {
        analysis: order,
        evaluation,
    })
}

fn check_disjoint(corpus: &TraceCorpus, split: &SampleSplit) -> Result<(), RunError> {
    let ids: HashSet<&str> = split
        .analysis
        .iter()
        .map(|&i| corpus.conversations()[i].id.as_str())
        .collect();
    if let Some(&i) = split
        .evaluation
        .iter()
        .find(|&&i| ids.contains(corpus.conversations()[i].id.as_str()))
    {
        return Err(RunError::InvalidConfig(format!(
            "conversation id {:?} appears in both the analysis and evaluation split",
            corpus.conversations()[i].id
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub policy: PolicySpec,
    pub conversations: usize,
    pub analysis_conversations: usize,
    pub eval_conversations: usize,
    pub cache_size: usize,
    pub metrics: MetricsSummary,
    pub categories: BTreeMap<String, MetricsSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunResult {
    pub run_id: String,
    pub version: String,
    pub started_at_unix: u64,
    pub duration_ms: u128,
    pub config: RunConfig,
    pub rows: Vec<RunRow>,
    /// One ledger per row, same order.
    #[serde(skip)]
    pub ledgers: Vec<MetricsLedger>,
    #[serde(skip)]
    pub patterns: BTreeMap<(usize, &'static str), PatternSet>,
}

impl RunResult {
    pub fn report_rows(&self) -> Vec<ReportRow> {
        self.rows
            .iter()
            .map(|r| ReportRow::new(&self.run_id, r, self.config.seed))
            .collect()
    }

    pub fn row(&self, policy: PolicySpec, conversations: usize, cache_size: usize) -> Option<&RunRow> {
        self.rows
            .iter()
            .find(|r| r.policy == policy && r.conversations == conversations && r.cache_size == cache_size)
    }
}

fn events_name(policy: PolicySpec, n: usize, size: usize) -> String {
    format!("{}-n{n}-c{size}.jsonl", policy.as_str())
}

/// Loads the corpus, mines patterns on the analysis part of every draw, and
/// replays the evaluation part once per (cache size, policy). Replays are
/// independent and run in parallel; results keep a fixed order.
pub fn run_experiment(config: &RunConfig) -> Result<RunResult, RunError> {
    config.validate()?;
    let started = Instant::now();
    let started_at_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let corpus = config.corpus.load(config.seed)?;
    let pipeline = build_pipeline(&config.embedder, config.stopwords.as_deref())?;
    let encoder = MemoEncoder::new(&pipeline);
    let sizes = config.effective_cache_sizes();

    let mut algorithms: Vec<Algorithm> = config.policies.iter().filter_map(|p| p.algorithm()).collect();
    algorithms.dedup();

    let mut rows = Vec::new();
    let mut ledgers = Vec::new();
    let mut patterns = BTreeMap::new();
    for &n in &config.sample_sizes {
        let split = sample_split(corpus.len(), n, config.split, config.seed)?;
        check_disjoint(&corpus, &split)?;
        let analysis_corpus = corpus.select(&split.analysis);
        let eval_corpus = corpus.select(&split.evaluation);

        let mut sets: BTreeMap<&'static str, PatternSet> = BTreeMap::new();
        for &algo in &algorithms {
            if !sets.contains_key(algo.as_str()) {
                sets.insert(algo.as_str(), analyze(algo, &analysis_corpus, &encoder, &config.analysis)?);
            }
        }

        let jobs: Vec<(usize, PolicySpec)> = sizes
            .iter()
            .flat_map(|&s| config.policies.iter().map(move |&p| (s, p)))
            .collect();
        let results: Vec<Result<(RunRow, MetricsLedger), RunError>> = jobs
            .par_iter()
            .map(|&(size, policy)| {
                let (cache_policy, admission) = policy.cache_policy();
                let cache_config = CacheConfig {
                    capacity: size,
                    policy: cache_policy,
                    ..config.cache.clone()
                };
                let mut cache = SemanticCache::new(cache_config, admission)?;
                let set = policy.algorithm().and_then(|a| sets.get(a.as_str()));
                let ledger = replay(&eval_corpus, &mut cache, set, &encoder);
                let row = RunRow {
                    policy,
                    conversations: n,
                    analysis_conversations: split.analysis.len(),
                    eval_conversations: split.evaluation.len(),
                    cache_size: size,
                    metrics: ledger.summary(),
                    categories: ledger.category_breakdown(),
                };
                Ok((row, ledger))
            })
            .collect();
        for r in results {
            let (row, ledger) = r?;
            rows.push(row);
            ledgers.push(ledger);
        }
        for (name, set) in sets {
            patterns.insert((n, name), set);
        }
    }

    let result = RunResult {
        run_id: config.run_id(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        started_at_unix,
        duration_ms: started.elapsed().as_millis(),
        config: config.clone(),
        rows,
        ledgers,
        patterns,
    };
    if let Some(dir) = &config.output_dir {
        write_outputs(&result, dir)?;
    }
    Ok(result)
}

fn write_outputs(result: &RunResult, dir: &Path) -> Result<(), RunError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let csv_path = dir.join("report.csv");
    let file = fs::File::create(&csv_path).map_err(io_err(&csv_path))?;
    write_report_csv(&result.report_rows(), file).map_err(|e| RunError::Report(e.to_string()))?;

    let json_path = dir.join("report.json");
    let json = serde_json::to_string_pretty(result).expect("run result serializes");
    fs::write(&json_path, json).map_err(io_err(&json_path))?;

    let pattern_dir = dir.join("patterns");
    fs::create_dir_all(&pattern_dir).map_err(io_err(&pattern_dir))?;
    for ((n, name), set) in &result.patterns {
        let p = pattern_dir.join(format!("{name}-n{n}.json"));
        fs::write(&p, set.to_json()).map_err(io_err(&p))?;
    }

    if result.config.write_events {
        let events_dir = dir.join("events");
        fs::create_dir_all(&events_dir).map_err(io_err(&events_dir))?;
        for (row, ledger) in result.rows.iter().zip(&result.ledgers) {
            let p = events_dir.join(events_name(row.policy, row.conversations, row.cache_size));
            let file = fs::File::create(&p).map_err(io_err(&p))?;
            ledger
                .write_jsonl(std::io::BufWriter::new(file))
                .map_err(io_err(&p))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_is_disjoint_nested_and_sized() {
        let a = sample_split(100, 40, 0.5, 3).unwrap();
        assert_eq!((a.analysis.len(), a.evaluation.len()), (20, 20));
        let all: HashSet<usize> = a.analysis.iter().chain(&a.evaluation).copied().collect();
        assert_eq!(all.len(), 40);
        let b = sample_split(100, 60, 0.5, 3).unwrap();
        assert_eq!(&b.analysis[..20], &a.analysis[..]);
        assert!(sample_split(10, 11, 0.5, 0).is_err());
        let odd = sample_split(10, 5, 0.5, 0).unwrap();
        assert_eq!(odd.analysis.len(), 3);
    }

    #[test]
    fn config_rejects_typos_and_bad_values() {
        let err = serde_json::from_str::<RunConfig>(r#"{"sead": 3}"#).unwrap_err();
        assert!(err.to_string().contains("sead"));
        let c = RunConfig {
            split: 1.0,
            ..RunConfig::default()
        };
        assert!(matches!(c.validate(), Err(RunError::InvalidConfig(_))));
    }

    #[test]
    fn embedder_config_forms() {
        let h: EmbedderConfig = serde_json::from_str(r#"{"kind": "hashing"}"#).unwrap();
        assert_eq!(h, EmbedderConfig::Hashing { dimension: 256 });
        let r: EmbedderConfig =
            serde_json::from_str(r#"{"kind": "remote", "url": "http://x", "model": "m", "dimension": 8}"#).unwrap();
        assert!(matches!(r, EmbedderConfig::Remote(_)));
    }

    #[test]
    fn run_id_ignores_output_location() {
        let a = RunConfig::default();
        let b = RunConfig {
            output_dir: Some("/tmp/x".into()),
            ..RunConfig::default()
        };
        assert_eq!(a.run_id(), b.run_id());
        let c = RunConfig {
            seed: 1,
            ..RunConfig::default()
        };
        assert_ne!(a.run_id(), c.run_id());
    }
}
