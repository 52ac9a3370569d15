//! Property checks and oracles shared by the integration tests and the
//! acceptance run. Each `check_*` takes one generated case.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use semcache_core::metrics::Totals;
use semcache_core::text::{EmbedError, EmbeddingVector, QueryEncoder};
use semcache_core::{
    kmeans, processed_tokens, wcss, Admission, Admit, CacheConfig, CacheEntry, Candidate, Conversation, KMeansParams,
    Label, Lookup, MetricsLedger, Outcome, Policy, QueryEvent, Rank, SemanticCache, TraceCorpus,
};

// ---------------------------------------------------------------- cache

pub const DIM: usize = 6;
const BASES: usize = 10;

/// Fixed unit vectors the cache cases draw keys from.
pub fn bases() -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    (0..BASES)
        .map(|_| {
            let v: Vec<f64> = (0..DIM).map(|_| rng.random_range(-1.0..1.0)).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / n).collect()
        })
        .collect()
}

/// A key near base `b`; `wobble` 0 is the base itself.
pub fn key(bases: &[Vec<f64>], b: usize, wobble: u8) -> Vec<f64> {
    let mut v = bases[b].clone();
    if wobble > 0 {
        let axis = (b + wobble as usize) % DIM;
        v[axis] += 0.15 * wobble as f64;
    }
    v
}

#[derive(Debug, Clone)]
pub enum Op {
    Lookup { base: usize, wobble: u8 },
    Admit { base: usize, wobble: u8, rank: Rank },
}

#[derive(Debug, Clone)]
pub struct CacheCase {
    pub policy: Policy,
    pub admission: Admission,
    pub capacity: usize,
    pub threshold: f64,
    pub ops: Vec<Op>,
}

pub fn rank_strategy() -> impl Strategy<Value = Rank> {
    prop_oneof![Just(Rank::High), Just(Rank::Mid), Just(Rank::Low), Just(Rank::Unranked)]
}

pub fn op_strategy() -> impl Strategy<Value = Op> {
    prop_oneof![
        (0..BASES, 0u8..3).prop_map(|(base, wobble)| Op::Lookup { base, wobble }),
        (0..BASES, 0u8..3, rank_strategy()).prop_map(|(base, wobble, rank)| Op::Admit { base, wobble, rank }),
    ]
}

pub fn cache_case_strategy() -> impl Strategy<Value = CacheCase> {
    (
        prop_oneof![Just(Policy::SpLfu), Just(Policy::Lfu), Just(Policy::Lru)],
        prop_oneof![Just(Admission::StoreAll), Just(Admission::Ranked)],
        1usize..8,
        prop_oneof![Just(0.8), Just(0.9), Just(0.97)],
        prop::collection::vec(op_strategy(), 1..60),
    )
        .prop_map(|(policy, admission, capacity, threshold, ops)| CacheCase {
            policy,
            admission,
            capacity,
            threshold,
            ops,
        })
}

pub fn candidate(v: Vec<f64>, rank: Rank, tag: usize) -> Candidate {
    Candidate {
        key_embedding: EmbeddingVector::from_raw(v),
        query_text: format!("q{tag}"),
        answer_text: format!("a{tag}"),
        query_tokens: 3,
        answer_tokens: 5,
        context_tokens: 0,
        pattern: None,
        rank,
    }
}

/// The entry a policy must evict, found by a plain scan.
pub fn expected_victim(policy: Policy, entries: &[CacheEntry]) -> Option<u64> {
    let mut best: Option<&CacheEntry> = None;
    for e in entries {
        let better = match best {
            None => true,
            Some(b) => {
                let (ek, bk) = match policy {
                    Policy::SpLfu => (e.priority, b.priority),
                    Policy::Lfu => (e.hit_count, b.hit_count),
                    Policy::Lru => (e.last_access, b.last_access),
                };
                ek < bk || (ek == bk && e.insert_seq < b.insert_seq)
            }
        };
        if better {
            best = Some(e);
        }
    }
    best.map(|e| e.insert_seq)
}

/// Best cosine match by brute force; ties to the smallest sequence number.
fn brute_lookup(entries: &[CacheEntry], v: &[f64], threshold: f64) -> Option<u64> {
    let cos = |a: &[f64], b: &[f64]| {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        (dot / (na * nb)).clamp(-1.0, 1.0)
    };
    let mut best: Option<(u64, f64)> = None;
    let mut sorted: Vec<&CacheEntry> = entries.iter().collect();
    sorted.sort_by_key(|e| e.insert_seq);
    for e in sorted {
        let s = cos(v, e.key_embedding.as_slice());
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((e.insert_seq, s));
        }
    }
    best.filter(|(_, s)| *s >= threshold).map(|(seq, _)| seq)
}

/// Runs one random operation sequence and checks, after every step: the
/// capacity bound, that evictions match the brute-force minimum, that
/// priorities never fall and hits strictly raise them, that lookups agree
/// with a brute-force scan, and that a hit at a threshold is also a hit, on
/// the same entry, at every lower threshold.
pub fn check_cache_ops(case: &CacheCase) -> Result<(), TestCaseError> {
    let bases = bases();
    let config = CacheConfig {
        capacity: case.capacity,
        similarity_threshold: case.threshold,
        policy: case.policy,
        ..CacheConfig::default()
    };
    let mut cache = SemanticCache::new(config, case.admission).map_err(|e| TestCaseError::fail(e.to_string()))?;
    for (step, op) in case.ops.iter().enumerate() {
        let before: HashMap<u64, u64> = cache.entries().iter().map(|e| (e.insert_seq, e.priority)).collect();
        let mut hit_seq = None;
        match op {
            Op::Lookup { base, wobble } => {
                let v = key(&bases, *base, *wobble);
                for lower in [0.5, 0.7, 0.8, 0.85, 0.9, 0.95] {
                    for higher in [0.7, 0.8, 0.9, 0.95, 0.99, 1.0] {
                        if lower > higher {
                            continue;
                        }
                        if let Lookup::Hit { seq, .. } = cache.peek(&v, higher).unwrap() {
                            match cache.peek(&v, lower).unwrap() {
                                Lookup::Hit { seq: s, .. } => prop_assert_eq!(s, seq),
                                other => prop_assert!(false, "hit at {} but {:?} at {}", higher, other, lower),
                            }
                        }
                    }
                }
                let expected = brute_lookup(cache.entries(), &v, case.threshold);
                let got = cache.lookup(&v).unwrap();
                match got {
                    Lookup::Hit { seq, .. } => {
                        prop_assert_eq!(Some(seq), expected);
                        hit_seq = Some(seq);
                    }
                    Lookup::Miss { .. } => prop_assert_eq!(expected, None),
                }
            }
            Op::Admit { base, wobble, rank } => {
                let v = key(&bases, *base, *wobble);
                let full = cache.len() >= case.capacity;
                let victim = expected_victim(case.policy, cache.entries());
                match cache.admit(candidate(v, *rank, step)).unwrap() {
                    Admit::Stored { evicted, .. } => {
                        prop_assert_eq!(evicted.is_some(), full);
                        if let Some(e) = evicted {
                            prop_assert_eq!(Some(e.insert_seq), victim);
                        }
                    }
                    Admit::Refreshed { .. } => {}
                    Admit::Rejected { .. } => prop_assert_eq!(case.admission, Admission::Ranked),
                }
            }
        }
        prop_assert!(cache.len() <= case.capacity);
        for e in cache.entries() {
            if let Some(&p) = before.get(&e.insert_seq) {
                prop_assert!(e.priority >= p, "priority of {} fell", e.insert_seq);
                if hit_seq == Some(e.insert_seq) && case.policy == Policy::SpLfu {
                    prop_assert!(e.priority > p, "hit did not raise priority");
                }
            }
        }
    }
    Ok(())
}

/// With every initial priority at 1, priority eviction and LFU make the same
/// decisions step for step.
pub fn check_splfu_matches_lfu(ops: &[Op], capacity: usize) -> Result<(), TestCaseError> {
    let bases = bases();
    let make = |policy| {
        SemanticCache::new(
            CacheConfig {
                capacity,
                policy,
                ..CacheConfig::default()
            },
            Admission::StoreAll,
        )
        .unwrap()
    };
    let (mut sp, mut lfu) = (make(Policy::SpLfu), make(Policy::Lfu));
    for (step, op) in ops.iter().enumerate() {
        match op {
            Op::Lookup { base, wobble } => {
                let v = key(&bases, *base, *wobble);
                prop_assert_eq!(sp.lookup(&v).unwrap(), lfu.lookup(&v).unwrap());
            }
            Op::Admit { base, wobble, rank } => {
                // Low and Unranked both start at priority 1
                let rank = if matches!(rank, Rank::High | Rank::Mid) { Rank::Low } else { *rank };
                let v = key(&bases, *base, *wobble);
                let a = sp.admit(candidate(v.clone(), rank, step)).unwrap();
                let b = lfu.admit(candidate(v, rank, step)).unwrap();
                let evicted = |r: &Admit| match r {
                    Admit::Stored { seq, evicted } => (Some(*seq), evicted.as_ref().map(|e| e.insert_seq)),
                    Admit::Refreshed { seq } => (Some(*seq), None),
                    Admit::Rejected { .. } => (None, None),
                };
                prop_assert_eq!(evicted(&a), evicted(&b));
            }
        }
    }
    let seqs = |c: &SemanticCache| c.entries().iter().map(|e| e.insert_seq).collect::<Vec<_>>();
    prop_assert_eq!(seqs(&sp), seqs(&lfu));
    Ok(())
}

// ---------------------------------------------------------------- metrics

#[derive(Debug, Clone)]
pub struct LedgerCase {
    /// Per conversation, per round: (query tokens, answer tokens).
    pub conversations: Vec<Vec<(u64, u64)>>,
    /// Outcome code per query in replay order: 0 miss, 1 hit, 2 bypassed.
    pub outcomes: Vec<u8>,
}

pub fn ledger_case_strategy() -> impl Strategy<Value = LedgerCase> {
    prop::collection::vec(prop::collection::vec((0u64..400, 0u64..2000), 1..6), 0..12).prop_flat_map(|convs| {
        let n: usize = convs.iter().map(Vec::len).sum();
        prop::collection::vec(0u8..3, n).prop_map(move |outcomes| LedgerCase {
            conversations: convs.clone(),
            outcomes,
        })
    })
}

fn conversation_with_tokens(id: usize, rounds: &[(u64, u64)]) -> Conversation {
    let mut conv = Conversation::new(
        format!("c{id}"),
        Some(["x", "y"][id % 2].to_string()),
        rounds.iter().map(|_| ("q", "a")),
    )
    .unwrap();
    for (r, &(q, a)) in conv.rounds.iter_mut().zip(rounds) {
        r.query_tokens = q;
        r.answer_tokens = a;
    }
    conv
}

/// Records the case through a ledger and recomputes hit ratio and
/// token-saving ratio from scratch: processed tokens of round r are all
/// query and answer tokens of rounds 1..=r.
pub fn check_ledger(case: &LedgerCase) -> Result<(), TestCaseError> {
    let mut ledger = MetricsLedger::new();
    let mut outcomes = case.outcomes.iter();
    let (mut queries, mut hits, mut bypassed, mut total, mut saved) = (0u64, 0u64, 0u64, 0u64, 0u64);
    for (i, rounds) in case.conversations.iter().enumerate() {
        let conv = conversation_with_tokens(i, rounds);
        for round in &conv.rounds {
            let code = *outcomes.next().unwrap();
            let outcome = [Outcome::Miss, Outcome::Hit, Outcome::Bypassed][code as usize];
            ledger.record(QueryEvent {
                conversation: conv.id.clone(),
                round: round.index,
                category: conv.category.clone(),
                outcome,
                query_tokens: round.query_tokens,
                processed_tokens: processed_tokens(&conv, round.index),
                matched_seq: None,
                similarity: None,
                note: None,
            });
            let c: u64 = rounds[..round.index as usize].iter().map(|(q, a)| q + a).sum();
            queries += 1;
            total += c;
            match code {
                1 => {
                    hits += 1;
                    saved += c;
                }
                2 => bypassed += 1,
                _ => {}
            }
        }
    }
    let t = ledger.totals();
    prop_assert_eq!(
        t,
        Totals {
            queries,
            hits,
            bypassed,
            total_tokens: total,
            hit_tokens: saved
        }
    );
    let hit_ratio = (queries > 0).then(|| hits as f64 / queries as f64);
    let tsr = (total > 0).then(|| saved as f64 / total as f64);
    prop_assert_eq!(ledger.hit_ratio(), hit_ratio);
    prop_assert_eq!(ledger.token_saving_ratio(), tsr);

    let mut buf = Vec::new();
    ledger.write_jsonl(&mut buf).unwrap();
    let back = MetricsLedger::read_jsonl(buf.as_slice()).unwrap();
    prop_assert_eq!(back.totals(), t);

    let by_cat = ledger.category_breakdown();
    let summed: u64 = by_cat.values().map(|s| s.totals.queries).sum();
    prop_assert_eq!(summed, queries);
    Ok(())
}

// ---------------------------------------------------------------- clustering

#[derive(Debug, Clone)]
pub struct KMeansCase {
    pub points: Vec<Vec<f64>>,
    pub k: usize,
    pub seed: u64,
}

pub fn kmeans_case_strategy() -> impl Strategy<Value = KMeansCase> {
    (1usize..6, 2usize..40).prop_flat_map(|(dim, n)| {
        (
            prop::collection::vec(prop::collection::vec(-10.0f64..10.0, dim), n),
            1..=n.min(6),
            any::<u64>(),
        )
            .prop_map(|(points, k, seed)| KMeansCase { points, k, seed })
    })
}

/// WCSS never rises between iterations, every centroid is the mean of its
/// members, and the reported final WCSS matches a recomputation.
pub fn check_kmeans(case: &KMeansCase) -> Result<(), TestCaseError> {
    let c = kmeans(&case.points, KMeansParams::new(case.k, case.seed)).unwrap();
    prop_assert_eq!(c.centroids.len(), case.k);
    for w in c.wcss_history.windows(2) {
        prop_assert!(w[1] <= w[0] + 1e-9 * w[0].abs().max(1.0), "WCSS rose: {:?}", c.wcss_history);
    }
    let dim = case.points[0].len();
    let mut sums: BTreeMap<usize, (Vec<f64>, usize)> = BTreeMap::new();
    for (p, l) in case.points.iter().zip(&c.labels) {
        let Label::Cluster(j) = *l else {
            return Err(TestCaseError::fail("k-means produced noise"));
        };
        let e = sums.entry(j).or_insert_with(|| (vec![0.0; dim], 0));
        for (s, x) in e.0.iter_mut().zip(p) {
            *s += x;
        }
        e.1 += 1;
    }
    let mut recomputed = 0.0;
    for (j, (sum, count)) in &sums {
        let centroid = &c.centroids[*j];
        prop_assert_eq!(centroid.member_count, *count);
        for (s, x) in sum.iter().zip(&centroid.vector) {
            prop_assert!((s / *count as f64 - x).abs() <= 1e-9, "centroid {} off", j);
        }
    }
    for (p, l) in case.points.iter().zip(&c.labels) {
        let Label::Cluster(j) = *l else { unreachable!() };
        recomputed += p
            .iter()
            .zip(&c.centroids[j].vector)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>();
    }
    prop_assert!((c.final_wcss() - recomputed).abs() <= 1e-9 * recomputed.max(1.0));
    prop_assert!((wcss(&case.points, &c.labels, &c.centroids) - recomputed).abs() <= 1e-9 * recomputed.max(1.0));
    Ok(())
}

// ---------------------------------------------------------------- encoders and corpora

/// Encoder backed by a fixed query → vector table.
pub struct TableEncoder {
    pub table: HashMap<String, Vec<f64>>,
    pub dimension: usize,
}

impl QueryEncoder for TableEncoder {
    fn embedder_name(&self) -> &str {
        "table"
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn encode(&self, query: &str) -> Result<EmbeddingVector, EmbedError> {
        self.table
            .get(query)
            .map(|v| EmbeddingVector::from_raw(v.clone()))
            .ok_or_else(|| EmbedError::Transport {
                attempts: 0,
                message: format!("no vector for {query:?}"),
            })
    }
}

fn axis(dim: usize, i: usize, weight: f64) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    v[i] = weight;
    v
}

fn mix(dim: usize, main: usize, side: usize) -> Vec<f64> {
    // 0.92 to the main axis, 0.846 between two mixes: distinct but near
    let mut v = axis(dim, main, 0.92);
    v[side] = (1.0f64 - 0.92 * 0.92).sqrt();
    v
}

/// A three-round corpus for the selective hierarchy. Round 1 has two
/// groups: group A (40 conversations, mostly the same question) and group B
/// (40 conversations, all distinct). Only A clears both extension
/// thresholds. Round 2 of every conversation is a distinct question, so no
/// round-2 pattern survives, and round 3 exists only to show the loop stops.
pub struct PruningScenario {
    pub corpus: TraceCorpus,
    pub encoder: TableEncoder,
    /// Conversation ids of group A.
    pub group_a: Vec<String>,
}

pub fn pruning_scenario() -> PruningScenario {
    const A: usize = 40;
    const B: usize = 40;
    let dim = 4 + 3 * (A + B) + 8;
    let mut table = HashMap::new();
    let mut side = 4;
    let mut fresh = |table: &mut HashMap<String, Vec<f64>>, name: String, main: usize| {
        table.insert(name.clone(), mix(dim, main, side));
        side += 1;
        name
    };
    table.insert("a popular".to_string(), axis(dim, 0, 1.0));
    let mut conversations = Vec::new();
    let mut group_a = Vec::new();
    for i in 0..A + B {
        let in_a = i < A;
        let first = if in_a && i % 4 != 0 {
            "a popular".to_string()
        } else {
            fresh(&mut table, format!("{} {i}", if in_a { "a" } else { "b" }), if in_a { 0 } else { 1 })
        };
        let second = fresh(&mut table, format!("second {i}"), 2);
        let third = fresh(&mut table, format!("third {i}"), 3);
        let id = format!("conv-{i:03}");
        if in_a {
            group_a.push(id.clone());
        }
        conversations.push(
            Conversation::new(id, None, [(first, "ok".to_string()), (second, "ok".into()), (third, "ok".into())])
                .unwrap(),
        );
    }
    PruningScenario {
        corpus: TraceCorpus::new(conversations),
        encoder: TableEncoder { table, dimension: dim },
        group_a,
    }
}
