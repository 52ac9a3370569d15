//! Hit-ratio and token-saving accounting over replayed queries.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::trace::Conversation;

/// Category key used for events without a category.
pub const UNCATEGORIZED: &str = "uncategorized";

/// Tokens the LLM processes to answer round `round` (1-based): every earlier
/// query and answer as context, plus the current query and answer.
///
/// Panics if `round` is outside the conversation.
pub fn processed_tokens(conversation: &Conversation, round: u32) -> u64 {
    assert!(
        round >= 1 && round as usize <= conversation.len(),
        "round {round} outside conversation {:?} with {} rounds",
        conversation.id,
        conversation.len()
    );
    conversation.rounds[..round as usize]
        .iter()
        .map(|r| r.pair_tokens())
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Hit,
    Miss,
    /// A miss whose answer was not admitted: rejected by the admission gate or
    /// never embedded. Counts exactly like a miss in both ratios.
    Bypassed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryEvent {
    pub conversation: String,
    pub round: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    pub outcome: Outcome,
    pub query_tokens: u64,
    pub processed_tokens: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matched_seq: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub similarity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Totals {
    pub queries: u64,
    pub hits: u64,
    pub bypassed: u64,
    pub total_tokens: u64,
    pub hit_tokens: u64,
}

impl Totals {
    fn add(&mut self, e: &QueryEvent) {
        self.queries += 1;
        self.total_tokens += e.processed_tokens;
        match e.outcome {
            Outcome::Hit => {
                self.hits += 1;
                self.hit_tokens += e.processed_tokens;
            }
            Outcome::Bypassed => self.bypassed += 1,
            Outcome::Miss => {}
        }
    }

    pub fn from_events<'a>(events: impl IntoIterator<Item = &'a QueryEvent>) -> Self {
        let mut t = Totals::default();
        events.into_iter().for_each(|e| t.add(e));
        t
    }

    pub fn hit_ratio(&self) -> Option<f64> {
        (self.queries > 0).then(|| self.hits as f64 / self.queries as f64)
    }

    pub fn token_saving_ratio(&self) -> Option<f64> {
        (self.total_tokens > 0).then(|| self.hit_tokens as f64 / self.total_tokens as f64)
    }

    pub fn summary(&self) -> MetricsSummary {
        MetricsSummary {
            totals: *self,
            hit_ratio: self.hit_ratio(),
            token_saving_ratio: self.token_saving_ratio(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    #[serde(flatten)]
    pub totals: Totals,
    /// `None` when there were no queries.
    pub hit_ratio: Option<f64>,
    /// `None` when no tokens were processed.
    pub token_saving_ratio: Option<f64>,
}

/// Append-only event list with running totals.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsLedger {
    events: Vec<QueryEvent>,
    totals: Totals,
}

impl MetricsLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, event: QueryEvent) {
        self.totals.add(&event);
        self.events.push(event);
    }

    pub fn events(&self) -> &[QueryEvent] {
        &self.events
    }

    pub fn totals(&self) -> Totals {
        self.totals
    }

    pub fn summary(&self) -> MetricsSummary {
        self.totals.summary()
    }

    pub fn hit_ratio(&self) -> Option<f64> {
        self.totals.hit_ratio()
    }

    pub fn token_saving_ratio(&self) -> Option<f64> {
        self.totals.token_saving_ratio()
    }

    /// Per-category metrics; events without a category fall under
    /// [`UNCATEGORIZED`].
    pub fn category_breakdown(&self) -> BTreeMap<String, MetricsSummary> {
        let mut by_cat: BTreeMap<String, Totals> = BTreeMap::new();
        for e in &self.events {
            let key = e.category.as_deref().unwrap_or(UNCATEGORIZED);
            by_cat.entry(key.to_string()).or_default().add(e);
        }
        by_cat.into_iter().map(|(k, t)| (k, t.summary())).collect()
    }

    pub fn write_jsonl(&self, mut writer: impl Write) -> std::io::Result<()> {
        for e in &self.events {
            serde_json::to_writer(&mut writer, e)?;
            writer.write_all(b"\n")?;
        }
        writer.flush()
    }

    pub fn read_jsonl(reader: impl BufRead) -> Result<Self, serde_json::Error> {
        let mut ledger = Self::new();
        for line in reader.lines() {
            let line = line.map_err(serde_json::Error::io)?;
            if line.trim().is_empty() {
                continue;
            }
            ledger.record(serde_json::from_str(&line)?);
        }
        Ok(ledger)
    }
}

/// `100 * (candidate - baseline) / baseline`, or `None` for a zero baseline.
pub fn relative_change(candidate: f64, baseline: f64) -> Option<f64> {
    (baseline != 0.0).then(|| 100.0 * (candidate - baseline) / baseline)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativeImprovement {
    /// Percent; `None` when the baseline is zero or missing.
    pub hit_ratio: Option<f64>,
    pub token_saving_ratio: Option<f64>,
}

pub fn relative_improvement(candidate: &MetricsSummary, baseline: &MetricsSummary) -> RelativeImprovement {
    let rel = |c: Option<f64>, b: Option<f64>| c.zip(b).and_then(|(c, b)| relative_change(c, b));
    RelativeImprovement {
        hit_ratio: rel(candidate.hit_ratio, baseline.hit_ratio),
        token_saving_ratio: rel(candidate.token_saving_ratio, baseline.token_saving_ratio),
    }
}
