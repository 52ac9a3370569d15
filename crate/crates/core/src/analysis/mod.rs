//! Offline semantic-pattern mining over a trace corpus and runtime
//! classification of new queries against the mined patterns.
//!
//! Two hierarchies are available. [`co_hsc`] clusters every round
//! independently into `k` patterns. [`se_hsc`] only descends below patterns
//! that are both frequent and cache-friendly, clustering each surviving
//! pattern's follow-up queries into progressively fewer children.

mod config;
mod hsc;
mod pattern;

pub use config::{AnalysisConfig, ClusteringMethod, RankScope, SurvivalRule};
pub use hsc::{analyze, co_hsc, pattern_token_saving_ratio, se_hsc, token_saving_ratio_of};
pub use pattern::{
    classify_query, rank_patterns, rank_positions, Algorithm, Classification, MetaPatternInfo, PatternRef,
    PatternSet, QueryId, Rank, SemanticPattern, PATTERN_SET_VERSION,
};

use thiserror::Error;

use crate::cluster::ClusterError;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("invalid analysis config: {0}")]
    InvalidConfig(String),
    #[error("corpus has no embeddable queries")]
    EmptyCorpus,
    #[error("clustering failed: {0}")]
    Cluster(#[from] ClusterError),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed pattern file: {0}")]
    Parse(String),
    #[error("unsupported pattern file version {found}, expected {expected}")]
    Version { found: u64, expected: u64 },
    #[error("pattern {conversation}#{round} not found in corpus")]
    UnknownQuery { conversation: String, round: u32 },
}
