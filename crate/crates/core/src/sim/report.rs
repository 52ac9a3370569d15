use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::experiment::RunRow;
use crate::metrics::relative_change;

/// One CSV report line. Column order is fixed by field order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub run_id: String,
    pub policy: String,
    pub conversations: usize,
    pub eval_conversations: usize,
    pub cache_size: usize,
    pub queries: u64,
    pub hits: u64,
    pub bypassed: u64,
    /// Empty when there were no queries.
    pub hit_ratio: Option<f64>,
    pub token_saving_ratio: Option<f64>,
    pub hit_tokens: u64,
    pub total_tokens: u64,
    pub seed: u64,
}

impl ReportRow {
    pub fn new(run_id: &str, row: &RunRow, seed: u64) -> Self {
        let t = row.metrics.totals;
        Self {
            run_id: run_id.to_string(),
            policy: row.policy.as_str().to_string(),
            conversations: row.conversations,
            eval_conversations: row.eval_conversations,
            cache_size: row.cache_size,
            queries: t.queries,
            hits: t.hits,
            bypassed: t.bypassed,
            hit_ratio: row.metrics.hit_ratio,
            token_saving_ratio: row.metrics.token_saving_ratio,
            hit_tokens: t.hit_tokens,
            total_tokens: t.total_tokens,
            seed,
        }
    }
}

pub fn write_report_csv(rows: &[ReportRow], writer: impl Write) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record([
            "run_id",
            "policy",
            "conversations",
            "eval_conversations",
            "cache_size",
            "queries",
            "hits",
            "bypassed",
            "hit_ratio",
            "token_saving_ratio",
            "hit_tokens",
            "total_tokens",
            "seed",
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_report_csv(reader: impl Read) -> csv::Result<Vec<ReportRow>> {
    csv::Reader::from_reader(reader).deserialize().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub conversations: usize,
    pub cache_size: usize,
    pub candidate_policy: String,
    pub baseline_policy: String,
    pub candidate_hit_ratio: Option<f64>,
    pub baseline_hit_ratio: Option<f64>,
    /// Percent; empty when the baseline is zero.
    pub hit_ratio_change_pct: Option<f64>,
    pub candidate_token_saving_ratio: Option<f64>,
    pub baseline_token_saving_ratio: Option<f64>,
    pub token_saving_change_pct: Option<f64>,
}

fn keyed<'a>(
    rows: &'a [ReportRow],
    policy: Option<&str>,
    side: &str,
) -> Result<BTreeMap<(usize, usize), &'a ReportRow>, String> {
    let mut out = BTreeMap::new();
    for r in rows.iter().filter(|r| policy.is_none_or(|p| r.policy == p)) {
        if let Some(prev) = out.insert((r.conversations, r.cache_size), r) {
            return Err(format!(
                "{side} report has several policies ({}, {}) at conversations={} cache_size={}; select one",
                prev.policy, r.policy, r.conversations, r.cache_size
            ));
        }
    }
    if out.is_empty() {
        return Err(format!("{side} report has no matching rows"));
    }
    Ok(out)
}

/// Joins two reports on `(conversations, cache_size)` and computes the
/// relative change of the candidate over the baseline. Each side may be
/// narrowed to one policy.
pub fn compare_reports(
    candidate: &[ReportRow],
    baseline: &[ReportRow],
    candidate_policy: Option<&str>,
    baseline_policy: Option<&str>,
) -> Result<Vec<ComparisonRow>, String> {
    let cand = keyed(candidate, candidate_policy, "candidate")?;
    let base = keyed(baseline, baseline_policy, "baseline")?;
    let rel = |c: Option<f64>, b: Option<f64>| c.zip(b).and_then(|(c, b)| relative_change(c, b));
    let rows: Vec<ComparisonRow> = cand
        .iter()
        .filter_map(|(key, c)| base.get(key).map(|b| (key, c, b)))
        .map(|(&(conversations, cache_size), c, b)| ComparisonRow {
            conversations,
            cache_size,
            candidate_policy: c.policy.clone(),
            baseline_policy: b.policy.clone(),
            candidate_hit_ratio: c.hit_ratio,
            baseline_hit_ratio: b.hit_ratio,
            hit_ratio_change_pct: rel(c.hit_ratio, b.hit_ratio),
            candidate_token_saving_ratio: c.token_saving_ratio,
            baseline_token_saving_ratio: b.token_saving_ratio,
            token_saving_change_pct: rel(c.token_saving_ratio, b.token_saving_ratio),
        })
        .collect();
    if rows.is_empty() {
        return Err("the reports share no (conversations, cache_size) points".into());
    }
    Ok(rows)
}
