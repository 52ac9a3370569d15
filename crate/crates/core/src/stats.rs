//! Descriptive statistics over a trace corpus.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::trace::{TraceCorpus, TraceError};

/// Upper bounds of the per-pair token buckets. The final bucket is open-ended.
pub const PAIR_TOKEN_EDGES: [u64; 6] = [1_100, 2_190, 3_270, 4_230, 5_420, 6_490];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenBucket {
    pub lower: u64,
    /// Exclusive; `None` for the last bucket.
    pub upper: Option<u64>,
    pub count: u64,
    pub percent: f64,
}

impl TokenBucket {
    pub fn label(&self) -> String {
        match self.upper {
            Some(u) => format!("[{}, {})", self.lower, u),
            None => format!("[{}, inf)", self.lower),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub conversations: u64,
    pub queries: u64,
    pub mean_rounds: f64,
    /// rounds per conversation → number of conversations
    pub round_histogram: BTreeMap<u64, u64>,
    pub pair_token_buckets: Vec<TokenBucket>,
    pub mean_query_tokens: f64,
    pub mean_answer_tokens: f64,
    /// category → number of queries; uncategorized conversations are omitted
    pub category_queries: BTreeMap<String, u64>,
}

pub fn corpus_stats(corpus: &TraceCorpus) -> Result<StatsReport, TraceError> {
    if corpus.is_empty() {
        return Err(TraceError::EmptyCorpus);
    }
    let mut round_histogram = BTreeMap::new();
    let mut category_queries = BTreeMap::new();
    let mut counts = [0u64; PAIR_TOKEN_EDGES.len() + 1];
    let (mut queries, mut q_tokens, mut a_tokens) = (0u64, 0u64, 0u64);

    for conv in corpus.conversations() {
        *round_histogram.entry(conv.len() as u64).or_insert(0) += 1;
        if let Some(cat) = &conv.category {
            *category_queries.entry(cat.clone()).or_insert(0) += conv.len() as u64;
        }
        for round in &conv.rounds {
            queries += 1;
            q_tokens += round.query_tokens;
            a_tokens += round.answer_tokens;
            let pair = round.pair_tokens();
            let slot = PAIR_TOKEN_EDGES
                .iter()
                .position(|&edge| pair < edge)
                .unwrap_or(PAIR_TOKEN_EDGES.len());
            counts[slot] += 1;
        }
    }

    let pair_token_buckets = counts
        .iter()
        .enumerate()
        .map(|(i, &count)| TokenBucket {
            lower: if i == 0 { 0 } else { PAIR_TOKEN_EDGES[i - 1] },
            upper: PAIR_TOKEN_EDGES.get(i).copied(),
            count,
            percent: 100.0 * count as f64 / queries as f64,
        })
        .collect();

    Ok(StatsReport {
        conversations: corpus.len() as u64,
        queries,
        mean_rounds: queries as f64 / corpus.len() as f64,
        round_histogram,
        pair_token_buckets,
        mean_query_tokens: q_tokens as f64 / queries as f64,
        mean_answer_tokens: a_tokens as f64 / queries as f64,
        category_queries,
    })
}

impl StatsReport {
    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("stats report serializes")
    }

    /// Long-format CSV: `section,label,count,value`.
    pub fn write_csv(&self, writer: impl Write) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["section", "label", "count", "value"])?;
        let summary = [
            ("conversations", self.conversations as f64),
            ("queries", self.queries as f64),
            ("mean_rounds", self.mean_rounds),
            ("mean_query_tokens", self.mean_query_tokens),
            ("mean_answer_tokens", self.mean_answer_tokens),
        ];
        for (label, value) in summary {
            w.write_record(["summary", label, "", &value.to_string()])?;
        }
        for (rounds, n) in &self.round_histogram {
            let share = *n as f64 / self.conversations as f64 * 100.0;
            w.write_record(["rounds", &rounds.to_string(), &n.to_string(), &share.to_string()])?;
        }
        for b in &self.pair_token_buckets {
            w.write_record(["pair_tokens", &b.label(), &b.count.to_string(), &b.percent.to_string()])?;
        }
        for (cat, n) in &self.category_queries {
            let share = *n as f64 / self.queries as f64 * 100.0;
            w.write_record(["category", cat, &n.to_string(), &share.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}
