//! Semantic caching for multi-round LLM chat, plus a deterministic
//! trace-replay simulator to evaluate cache policies.
//!
//! The pieces, bottom up: [`trace`] holds conversations, [`text`] turns
//! queries into embeddings, [`cluster`] and [`analysis`] mine per-round
//! semantic patterns from a corpus, [`cache`] is the runtime cache, and
//! [`sim`] replays traces through it while [`metrics`] keeps score.

pub mod analysis;
pub mod cache;
pub mod cluster;
pub mod metrics;
pub mod sim;
pub mod stats;
pub mod synthetic;
pub mod text;
pub mod trace;

pub use analysis::{
    analyze, classify_query, co_hsc, rank_patterns, se_hsc, Algorithm, AnalysisConfig, AnalysisError, Classification,
    PatternSet, Rank, SemanticPattern,
};
pub use cache::{Admission, Admit, CacheConfig, CacheEntry, CacheError, Candidate, Lookup, Policy, SemanticCache};
pub use cluster::{assign_nearest, dbscan, kmeans, wcss, Centroid, ClusterError, Clustering, DbscanParams, KMeansParams, Label};
pub use metrics::{
    processed_tokens, relative_improvement, MetricsLedger, MetricsSummary, Outcome, QueryEvent, RelativeImprovement,
};
pub use sim::{replay, run_experiment, CorpusSource, EmbedderConfig, PolicySpec, Preset, RunConfig, RunError, RunResult};
pub use stats::{corpus_stats, StatsReport, TokenBucket};
pub use synthetic::{generate_synthetic, generate_synthetic_with_truth, SyntheticSpec, SyntheticTruth};
pub use text::{
    cosine_similarity, count_tokens, preprocess, EmbedError, Embedder, EmbeddingVector, HashingEmbedder,
    MemoEncoder, QueryEncoder, RemoteEmbedder, RemoteEmbedderConfig, StopWords, TextPipeline,
};
pub use trace::{load_corpus, read_corpus, save_corpus, write_corpus, Conversation, Round, TraceCorpus, TraceError};
