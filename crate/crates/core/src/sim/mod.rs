//! Trace replay against a cache, and the experiment harness built on it.

mod experiment;
mod report;

pub use experiment::{
    build_pipeline, run_experiment, sample_split, CorpusSource, EmbedderConfig, PolicySpec, Preset, RunConfig,
    RunError, RunResult, RunRow, SampleSplit,
};
pub use report::{compare_reports, read_report_csv, write_report_csv, ComparisonRow, ReportRow};

use crate::analysis::{classify_query, PatternSet, Rank};
use crate::cache::{Admission, Admit, Candidate, Lookup, SemanticCache};
use crate::metrics::{processed_tokens, MetricsLedger, Outcome, QueryEvent};
use crate::text::QueryEncoder;
use crate::trace::TraceCorpus;

/// Replays `sample` through `cache`, conversation by conversation and round
/// by round. A miss is answered from the trace and offered for admission,
/// ranked through `patterns`. Without patterns the cache runs in bootstrap
/// mode and stores every miss. A query that cannot be embedded is recorded
/// as Bypassed and the replay continues.
pub fn replay(
    sample: &TraceCorpus,
    cache: &mut SemanticCache,
    patterns: Option<&PatternSet>,
    encoder: &dyn QueryEncoder,
) -> MetricsLedger {
    let mut ledger = MetricsLedger::new();
    if patterns.is_none() {
        cache.set_admission(Admission::StoreAll);
    }
    for conv in sample.conversations() {
        for round in &conv.rounds {
            let c = processed_tokens(conv, round.index);
            let mut event = QueryEvent {
                conversation: conv.id.clone(),
                round: round.index,
                category: conv.category.clone(),
                outcome: Outcome::Miss,
                query_tokens: round.query_tokens,
                processed_tokens: c,
                matched_seq: None,
                similarity: None,
                note: None,
            };
            let v = match encoder.encode(&round.query_text) {
                Ok(v) => v,
                Err(e) => {
                    event.outcome = Outcome::Bypassed;
                    event.note = Some(format!("embed-error: {e}"));
                    ledger.record(event);
                    continue;
                }
            };
            match cache.lookup(v.as_slice()) {
                Ok(Lookup::Hit { seq, similarity }) => {
                    event.outcome = Outcome::Hit;
                    event.matched_seq = Some(seq);
                    event.similarity = Some(similarity);
                }
                Ok(Lookup::Miss { .. }) => {
                    let (pattern, rank) = match patterns {
                        Some(set) => {
                            let cls = classify_query(set, round.index, v.as_slice());
                            (cls.pattern, cls.rank)
                        }
                        None => (None, Rank::Unranked),
                    };
                    let candidate = Candidate {
                        key_embedding: v,
                        query_text: round.query_text.clone(),
                        answer_text: round.answer_text.clone(),
                        query_tokens: round.query_tokens,
                        answer_tokens: round.answer_tokens,
                        context_tokens: c - round.pair_tokens(),
                        pattern,
                        rank,
                    };
                    match cache.admit(candidate) {
                        Ok(Admit::Stored { .. } | Admit::Refreshed { .. }) => {}
                        Ok(Admit::Rejected { reason }) => {
                            event.outcome = Outcome::Bypassed;
                            event.note = Some(reason.as_str().to_string());
                        }
                        Err(e) => {
                            event.outcome = Outcome::Bypassed;
                            event.note = Some(e.to_string());
                        }
                    }
                }
                Err(e) => {
                    event.outcome = Outcome::Bypassed;
                    event.note = Some(e.to_string());
                }
            }
            ledger.record(event);
        }
    }
    ledger
}
