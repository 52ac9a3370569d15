//! Similarity-keyed answer cache with rank-aware admission and eviction.
//!
//! Entries are found by an exact linear scan for the highest cosine
//! similarity. Under [`Policy::SpLfu`] every entry carries a priority that
//! starts at 3, 2 or 1 for High, Mid and other ranks and grows by
//! `hit_increment` on every hit; the lowest priority is evicted first, the
//! oldest entry on ties. LFU and LRU are plain baselines that admit
//! everything.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{PatternRef, Rank};
use crate::text::embed::cosine_unchecked;
use crate::text::EmbeddingVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    SpLfu,
    Lfu,
    Lru,
}

impl Policy {
    pub fn as_str(self) -> &'static str {
        match self {
            Policy::SpLfu => "sp-lfu",
            Policy::Lfu => "lfu",
            Policy::Lru => "lru",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CacheConfig {
    /// Maximum number of entries.
    pub capacity: usize,
    pub similarity_threshold: f64,
    /// Occupancy share below which the ranked gate also admits Low.
    pub cold_occupancy: f64,
    pub policy: Policy,
    pub hit_increment: u64,
    /// Under ranked admission, also store Unranked queries while cold.
    pub cold_admit_unranked: bool,
}

impl Default for CacheConfig {
    fn default() -> Self {
        Self {
            capacity: 100,
            similarity_threshold: 0.90,
            cold_occupancy: 0.8,
            policy: Policy::SpLfu,
            hit_increment: 1,
            cold_admit_unranked: false,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum CacheError {
    #[error("invalid cache config: {0}")]
    InvalidConfig(String),
    #[error("embedding has dimension {actual}, cache holds dimension {expected}")]
    DimensionMismatch { expected: usize, actual: usize },
}

impl CacheConfig {
    pub fn validate(&self) -> Result<(), CacheError> {
        let bad = |m: String| Err(CacheError::InvalidConfig(m));
        if self.capacity == 0 {
            return bad("capacity must be at least 1".into());
        }
        if !(self.similarity_threshold > 0.0 && self.similarity_threshold <= 1.0) {
            return bad(format!("similarity_threshold = {} must lie in (0, 1]", self.similarity_threshold));
        }
        if !(self.cold_occupancy > 0.0 && self.cold_occupancy <= 1.0) {
            return bad(format!("cold_occupancy = {} must lie in (0, 1]", self.cold_occupancy));
        }
        if self.hit_increment == 0 {
            return bad("hit_increment must be positive".into());
        }
        Ok(())
    }
}

/// How misses are admitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Admission {
    /// Store every miss. Used by the baselines and before patterns exist.
    StoreAll,
    /// Gate by pattern rank and occupancy.
    Ranked,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CacheEntry {
    pub key_embedding: EmbeddingVector,
    pub query_text: String,
    pub answer_text: String,
    pub query_tokens: u64,
    pub answer_tokens: u64,
    /// Tokens of earlier rounds that accompanied the query.
    pub context_tokens: u64,
    pub pattern: Option<PatternRef>,
    pub rank: Rank,
    pub priority: u64,
    pub insert_seq: u64,
    pub hit_count: u64,
    /// Logical time of the last insert or hit.
    pub last_access: u64,
}

/// A miss offered for admission, its rank already resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub key_embedding: EmbeddingVector,
    pub query_text: String,
    pub answer_text: String,
    pub query_tokens: u64,
    pub answer_tokens: u64,
    pub context_tokens: u64,
    pub pattern: Option<PatternRef>,
    pub rank: Rank,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lookup {
    Hit { seq: u64, similarity: f64 },
    /// `best` is the highest similarity seen, if the cache was non-empty.
    Miss { best: Option<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectReason {
    /// Unranked query under ranked admission.
    Unranked,
    /// Low-rank query once occupancy reached the cold boundary.
    RankBelowPressureThreshold,
}

impl RejectReason {
    pub fn as_str(self) -> &'static str {
        match self {
            RejectReason::Unranked => "unranked",
            RejectReason::RankBelowPressureThreshold => "rank-below-pressure-threshold",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Admit {
    Stored { seq: u64, evicted: Option<Box<CacheEntry>> },
    /// An entry at or above the similarity threshold already existed; its
    /// recency was refreshed instead of storing a twin.
    Refreshed { seq: u64 },
    Rejected { reason: RejectReason },
}

/// Serializable view of one entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntrySummary {
    pub seq: u64,
    pub rank: Rank,
    pub priority: u64,
    pub hit_count: u64,
    pub last_access: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<PatternRef>,
    pub query_tokens: u64,
    pub query: String,
}

/// Mutation needs `&mut self`, so a shared cache takes a lock for writes and
/// may be read concurrently otherwise.
#[derive(Debug, Clone)]
pub struct SemanticCache {
    config: CacheConfig,
    admission: Admission,
    /// Always in `insert_seq` order.
    entries: Vec<CacheEntry>,
    next_seq: u64,
    clock: u64,
    dimension: Option<usize>,
}

fn initial_priority(policy: Policy, rank: Rank) -> u64 {
    match (policy, rank) {
        (Policy::SpLfu, Rank::High) => 3,
        (Policy::SpLfu, Rank::Mid) => 2,
        _ => 1,
    }
}

impl SemanticCache {
    /// LFU and LRU always store every miss regardless of `admission`.
    pub fn new(config: CacheConfig, admission: Admission) -> Result<Self, CacheError> {
        config.validate()?;
        let admission = match config.policy {
            Policy::SpLfu => admission,
            Policy::Lfu | Policy::Lru => Admission::StoreAll,
        };
        Ok(Self {
            entries: Vec::with_capacity(config.capacity),
            config,
            admission,
            next_seq: 0,
            clock: 0,
            dimension: None,
        })
    }

    pub fn config(&self) -> &CacheConfig {
        &self.config
    }

    pub fn admission(&self) -> Admission {
        self.admission
    }

    /// Switches the admission gate. LFU and LRU stay store-all.
    pub fn set_admission(&mut self, admission: Admission) {
        if self.config.policy == Policy::SpLfu {
            self.admission = admission;
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[CacheEntry] {
        &self.entries
    }

    pub fn entry(&self, seq: u64) -> Option<&CacheEntry> {
        self.entries.iter().find(|e| e.insert_seq == seq)
    }

    fn check_dimension(&self, v: &[f64]) -> Result<(), CacheError> {
        match self.dimension {
            Some(d) if d != v.len() => Err(CacheError::DimensionMismatch {
                expected: d,
                actual: v.len(),
            }),
            _ => Ok(()),
        }
    }

    /// Best match at `threshold` without touching any state. Ties go to the
    /// oldest entry.
    pub fn peek(&self, v: &[f64], threshold: f64) -> Result<Lookup, CacheError> {
        self.check_dimension(v)?;
        let mut best: Option<(u64, f64)> = None;
        for e in &self.entries {
            let s = cosine_unchecked(v, e.key_embedding.as_slice());
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((e.insert_seq, s));
            }
        }
        Ok(match best {
            Some((seq, similarity)) if similarity >= threshold => Lookup::Hit { seq, similarity },
            other => Lookup::Miss {
                best: other.map(|(_, s)| s),
            },
        })
    }

    /// Looks `v` up at the configured threshold and credits a hit to the
    /// matched entry.
    pub fn lookup(&mut self, v: &[f64]) -> Result<Lookup, CacheError> {
        let result = self.peek(v, self.config.similarity_threshold)?;
        self.clock += 1;
        if let Lookup::Hit { seq, .. } = result {
            let (policy, inc, now) = (self.config.policy, self.config.hit_increment, self.clock);
            let e = self
                .entries
                .iter_mut()
                .find(|e| e.insert_seq == seq)
                .expect("hit refers to a live entry");
            e.hit_count += 1;
            e.last_access = now;
            if policy == Policy::SpLfu {
                e.priority += inc;
            }
        }
        Ok(result)
    }

    fn pressured(&self) -> bool {
        self.entries.len() as f64 >= self.config.cold_occupancy * self.config.capacity as f64
    }

    fn gate(&self, rank: Rank) -> Result<(), RejectReason> {
        if self.admission == Admission::StoreAll {
            return Ok(());
        }
        match rank {
            Rank::High | Rank::Mid => Ok(()),
            Rank::Low if !self.pressured() => Ok(()),
            Rank::Low => Err(RejectReason::RankBelowPressureThreshold),
            Rank::Unranked if self.config.cold_admit_unranked && !self.pressured() => Ok(()),
            Rank::Unranked => Err(RejectReason::Unranked),
        }
    }

    pub fn admit(&mut self, candidate: Candidate) -> Result<Admit, CacheError> {
        let v = candidate.key_embedding.as_slice();
        self.check_dimension(v)?;
        if let Err(reason) = self.gate(candidate.rank) {
            return Ok(Admit::Rejected { reason });
        }
        self.clock += 1;
        if let Lookup::Hit { seq, .. } = self.peek(v, self.config.similarity_threshold)? {
            let now = self.clock;
            if let Some(e) = self.entries.iter_mut().find(|e| e.insert_seq == seq) {
                e.last_access = now;
            }
            return Ok(Admit::Refreshed { seq });
        }
        let evicted = if self.entries.len() >= self.config.capacity {
            self.evict_one().map(Box::new)
        } else {
            None
        };
        let seq = self.next_seq;
        self.next_seq += 1;
        self.dimension = Some(v.len());
        self.entries.push(CacheEntry {
            priority: initial_priority(self.config.policy, candidate.rank),
            insert_seq: seq,
            hit_count: 0,
            last_access: self.clock,
            key_embedding: candidate.key_embedding,
            query_text: candidate.query_text,
            answer_text: candidate.answer_text,
            query_tokens: candidate.query_tokens,
            answer_tokens: candidate.answer_tokens,
            context_tokens: candidate.context_tokens,
            pattern: candidate.pattern,
            rank: candidate.rank,
        });
        Ok(Admit::Stored { seq, evicted })
    }

    /// Index of the entry the policy would evict next.
    pub fn victim(&self) -> Option<usize> {
        let key = |e: &CacheEntry| match self.config.policy {
            Policy::SpLfu => (e.priority, e.insert_seq),
            Policy::Lfu => (e.hit_count, e.insert_seq),
            Policy::Lru => (e.last_access, e.insert_seq),
        };
        (0..self.entries.len()).min_by_key(|&i| key(&self.entries[i]))
    }

    /// Removes the policy's victim; `None` on an empty cache.
    pub fn evict_one(&mut self) -> Option<CacheEntry> {
        let i = self.victim()?;
        let e = self.entries.remove(i);
        if self.entries.is_empty() {
            self.dimension = None;
        }
        Some(e)
    }

    pub fn snapshot(&self) -> Vec<EntrySummary> {
        self.entries
            .iter()
            .map(|e| EntrySummary {
                seq: e.insert_seq,
                rank: e.rank,
                priority: e.priority,
                hit_count: e.hit_count,
                last_access: e.last_access,
                pattern: e.pattern,
                query_tokens: e.query_tokens,
                query: e.query_text.clone(),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(deg: f64) -> EmbeddingVector {
        let r = deg.to_radians();
        EmbeddingVector::from_raw(vec![r.cos(), r.sin()])
    }

    fn cand(deg: f64, rank: Rank) -> Candidate {
        Candidate {
            key_embedding: unit(deg),
            query_text: format!("q{deg}"),
            answer_text: "a".into(),
            query_tokens: 1,
            answer_tokens: 1,
            context_tokens: 0,
            pattern: None,
            rank,
        }
    }

    fn cache(capacity: usize, policy: Policy, admission: Admission) -> SemanticCache {
        SemanticCache::new(
            CacheConfig {
                capacity,
                policy,
                ..CacheConfig::default()
            },
            admission,
        )
        .unwrap()
    }

    #[test]
    fn empty_cache_misses() {
        let mut c = cache(2, Policy::SpLfu, Admission::StoreAll);
        assert_eq!(c.lookup(unit(0.0).as_slice()).unwrap(), Lookup::Miss { best: None });
        assert!(c.evict_one().is_none());
    }

    #[test]
    fn threshold_is_inclusive_and_exclusive_below() {
        let mut c = cache(2, Policy::SpLfu, Admission::StoreAll);
        c.admit(cand(0.0, Rank::Low)).unwrap();
        assert!(matches!(c.lookup(unit(0.0).as_slice()).unwrap(), Lookup::Hit { seq: 0, similarity } if similarity == 1.0));
        // cos(27.13deg) ~ 0.89
        match c.lookup(unit(27.13).as_slice()).unwrap() {
            Lookup::Miss { best: Some(b) } => assert!((b - 0.89).abs() < 1e-3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ranked_gate_cold_and_pressured() {
        let mut c = cache(10, Policy::SpLfu, Admission::Ranked);
        assert!(matches!(c.admit(cand(0.0, Rank::Low)).unwrap(), Admit::Stored { .. }));
        assert_eq!(c.entries()[0].priority, 1);
        assert_eq!(c.admit(cand(90.0, Rank::Unranked)).unwrap(), Admit::Rejected { reason: RejectReason::Unranked });
        for i in 1..9 {
            // 30 degrees apart keeps every pair below 0.90
            c.admit(cand(i as f64 * 30.0, Rank::Mid)).unwrap();
        }
        assert_eq!(c.len(), 9);
        assert_eq!(
            c.admit(cand(270.0, Rank::Low)).unwrap(),
            Admit::Rejected {
                reason: RejectReason::RankBelowPressureThreshold
            }
        );
        assert!(matches!(c.admit(cand(270.0, Rank::High)).unwrap(), Admit::Stored { evicted: None, .. }));
        // full: High evicts the lowest priority (the Low entry) and starts at 3
        match c.admit(cand(300.0, Rank::High)).unwrap() {
            Admit::Stored { evicted: Some(e), seq } => {
                assert_eq!(e.insert_seq, 0);
                assert_eq!(c.entry(seq).unwrap().priority, 3);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(c.len(), 10);
    }

    #[test]
    fn duplicates_refresh_instead_of_storing() {
        let mut c = cache(3, Policy::Lru, Admission::StoreAll);
        c.admit(cand(0.0, Rank::Unranked)).unwrap();
        assert_eq!(c.admit(cand(1.0, Rank::Unranked)).unwrap(), Admit::Refreshed { seq: 0 });
        assert_eq!(c.len(), 1);
    }

    #[test]
    fn baselines_ignore_ranked_admission() {
        let mut c = cache(3, Policy::Lfu, Admission::Ranked);
        assert_eq!(c.admission(), Admission::StoreAll);
        assert!(matches!(c.admit(cand(0.0, Rank::Unranked)).unwrap(), Admit::Stored { .. }));
    }

    #[test]
    fn lru_evicts_least_recent() {
        let mut c = cache(2, Policy::Lru, Admission::StoreAll);
        c.admit(cand(0.0, Rank::Unranked)).unwrap(); // A
        c.admit(cand(90.0, Rank::Unranked)).unwrap(); // B
        c.lookup(unit(0.0).as_slice()).unwrap();
        c.lookup(unit(90.0).as_slice()).unwrap();
        match c.admit(cand(180.0, Rank::Unranked)).unwrap() {
            Admit::Stored { evicted: Some(e), .. } => assert_eq!(e.query_text, "q0"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let mut c = cache(2, Policy::Lru, Admission::StoreAll);
        c.admit(cand(0.0, Rank::Unranked)).unwrap();
        assert_eq!(
            c.lookup(&[1.0, 0.0, 0.0]),
            Err(CacheError::DimensionMismatch { expected: 2, actual: 3 })
        );
    }

    #[test]
    fn config_validation() {
        for bad in [
            CacheConfig { capacity: 0, ..Default::default() },
            CacheConfig { similarity_threshold: 0.0, ..Default::default() },
            CacheConfig { cold_occupancy: 1.5, ..Default::default() },
            CacheConfig { hit_increment: 0, ..Default::default() },
        ] {
            assert!(SemanticCache::new(bad, Admission::StoreAll).is_err());
        }
    }
}
