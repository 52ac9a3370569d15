//! Deterministic synthetic conversation traces.
//!
//! Each conversation belongs to one topic. A topic owns a fixed set of
//! keywords; every query of that topic carries all of them plus a few
//! question-specific words, so same-topic queries sit close together without
//! being near-duplicates of each other. "Hot" topics also keep a small pool of
//! popular questions per round depth; with the topic's duplicate probability a
//! query re-asks one of those (re-rendered with another sentence frame, word order and padding),
//! which makes it a near-duplicate of an earlier query. Frames and padding use
//! stop words only, so paraphrase siblings embed almost identically once
//! preprocessing strips them.

use std::collections::HashSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand::distr::weighted::WeightedIndex;
use rand_distr::{Distribution, LogNormal, Poisson};
use serde::{Deserialize, Serialize};

use crate::text::{count_tokens, StopWords};
use crate::trace::{Conversation, TraceCorpus, TraceError};

/// Rounds per conversation: `1 + Poisson(mean - 1)`, resampled above `max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoundDistribution {
    pub mean: f64,
    pub max: u32,
}

/// Log-normal token-count distribution given by its median and log-sigma.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TokenDistribution {
    pub median: f64,
    pub sigma: f64,
}

impl TokenDistribution {
    pub fn mean(&self) -> f64 {
        self.median * (self.sigma * self.sigma / 2.0).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub conversations: usize,
    pub rounds: RoundDistribution,
    /// Number of topic clusters.
    pub topics: usize,
    /// Zipf exponent of topic popularity; topic 0 is the most popular.
    pub topic_skew: f64,
    /// Topics that carry planted near-duplicates (the `hot_topics` most popular).
    pub hot_topics: usize,
    /// Target fraction of all queries that re-ask an earlier question.
    pub duplicate_rate: f64,
    /// Popular questions kept per (hot topic, round depth).
    pub pool_size: usize,
    /// Zipf exponent for picking which popular question is re-asked.
    pub pool_skew: f64,
    /// Repeats are planted only in the first `pool_depth` rounds, each round
    /// with its own question pool.
    pub pool_depth: u32,
    pub topic_keywords: usize,
    pub specific_words: usize,
    pub query_tokens: TokenDistribution,
    pub answer_tokens: TokenDistribution,
    pub categories: Vec<String>,
}

const DEFAULT_CATEGORIES: [&str; 8] = ["BRS", "CPI", "WRT", "COD", "MTH", "OQA", "ROL", "HRM"];

impl SyntheticSpec {
    /// Short, mostly single-round conversations with long answers and a 7.5%
    /// near-duplicate rate.
    pub fn lmsys_like(conversations: usize) -> Self {
        Self {
            conversations,
            rounds: RoundDistribution { mean: 1.8, max: 12 },
            topics: 60,
            topic_skew: 1.0,
            hot_topics: 4,
            duplicate_rate: 0.075,
            pool_size: 16,
            pool_skew: 0.5,
            pool_depth: 1,
            topic_keywords: 8,
            specific_words: 3,
            query_tokens: TokenDistribution { median: 48.0, sigma: 0.8 },
            answer_tokens: TokenDistribution { median: 675.0, sigma: 0.768 },
            categories: DEFAULT_CATEGORIES.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Long multi-round conversations with a 4.5% near-duplicate rate.
    pub fn moss_like(conversations: usize) -> Self {
        Self {
            rounds: RoundDistribution { mean: 6.7, max: 24 },
            duplicate_rate: 0.045,
            query_tokens: TokenDistribution { median: 28.0, sigma: 0.6 },
            answer_tokens: TokenDistribution { median: 220.0, sigma: 0.7 },
            ..Self::lmsys_like(conversations)
        }
    }

    /// Relative popularity of each topic, summing to 1.
    pub fn topic_weights(&self) -> Vec<f64> {
        let raw: Vec<f64> = (0..self.topics)
            .map(|t| 1.0 / ((t + 1) as f64).powf(self.topic_skew))
            .collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|w| w / total).collect()
    }

    /// Expected share of all queries that fall in rounds `1..=pool_depth`,
    /// from the truncated round-count distribution.
    pub fn planted_round_share(&self) -> f64 {
        let lambda = self.rounds.mean - 1.0;
        let max = self.rounds.max.max(1);
        let depth = self.pool_depth.max(1);
        // pmf of 1 + Poisson(lambda), truncated to 1..=max
        let mut pmf = Vec::with_capacity(max as usize);
        let mut term = (-lambda).exp();
        for k in 0..max {
            pmf.push(term);
            term *= lambda / (k + 1) as f64;
        }
        let mass: f64 = pmf.iter().sum();
        let (mut rounds, mut early) = (0.0, 0.0);
        for (k, p) in pmf.iter().enumerate() {
            let n = (k + 1) as u32;
            rounds += p * n as f64;
            early += p * n.min(depth) as f64;
        }
        if mass <= 0.0 || rounds <= 0.0 {
            1.0
        } else {
            early / rounds
        }
    }

    /// Per-topic probability that an early-round query re-asks a popular
    /// question, chosen so that the expected share over all queries is
    /// `duplicate_rate`.
    pub fn topic_duplicate_probability(&self, topic: usize) -> f64 {
        if topic >= self.hot_topics.min(self.topics) {
            return 0.0;
        }
        let hot_share: f64 = self.topic_weights()[..self.hot_topics].iter().sum();
        self.duplicate_rate / (hot_share * self.planted_round_share())
    }

    pub fn validate(&self) -> Result<(), TraceError> {
        let bad = |m: String| Err(TraceError::InvalidSpec(m));
        if !(0.0..=1.0).contains(&self.duplicate_rate) {
            return bad(format!("duplicate_rate {} outside [0, 1]", self.duplicate_rate));
        }
        if self.conversations == 0 {
            return bad("conversations must be positive".into());
        }
        if self.topics == 0 {
            return bad("topics must be positive".into());
        }
        if self.hot_topics > self.topics {
            return bad(format!("hot_topics {} exceeds topics {}", self.hot_topics, self.topics));
        }
        if self.duplicate_rate > 0.0 && (self.hot_topics == 0 || self.pool_size == 0) {
            return bad("a positive duplicate_rate needs hot_topics and pool_size > 0".into());
        }
        let p = if self.hot_topics > 0 { self.topic_duplicate_probability(0) } else { 0.0 };
        if p > 1.0 {
            return bad(format!(
                "per-topic duplicate probability {p:.3} exceeds 1; raise hot_topics or lower duplicate_rate"
            ));
        }
        if !(self.rounds.mean >= 1.0) || self.rounds.max == 0 || self.rounds.mean > self.rounds.max as f64 {
            return bad(format!("invalid round distribution {:?}", self.rounds));
        }
        if self.pool_depth == 0 || self.topic_keywords == 0 {
            return bad("pool_depth and topic_keywords must be positive".into());
        }
        if !(self.pool_skew >= 0.0) || !(self.topic_skew >= 0.0) {
            return bad("pool_skew and topic_skew must be non-negative".into());
        }
        for (name, d) in [("query_tokens", self.query_tokens), ("answer_tokens", self.answer_tokens)] {
            if !(d.median >= 1.0) || !(d.sigma >= 0.0) || !d.sigma.is_finite() {
                return bad(format!("invalid {name} distribution {d:?}"));
            }
        }
        if self.categories.is_empty() {
            return bad("at least one category is required".into());
        }
        Ok(())
    }
}

/// What the generator planted, for tests and diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTruth {
    /// Topic per conversation.
    pub topics: Vec<usize>,
    /// Per conversation, per round: the question id. Paraphrase siblings share an id.
    pub question_ids: Vec<Vec<u64>>,
    /// Per conversation, per round: whether the query re-asks an earlier question.
    pub planted_duplicates: Vec<Vec<bool>>,
}

impl SyntheticTruth {
    pub fn planted_fraction(&self) -> f64 {
        let total: usize = self.planted_duplicates.iter().map(Vec::len).sum();
        let planted: usize = self
            .planted_duplicates
            .iter()
            .map(|r| r.iter().filter(|p| **p).count())
            .sum();
        if total == 0 {
            0.0
        } else {
            planted as f64 / total as f64
        }
    }
}

pub fn generate_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<TraceCorpus, TraceError> {
    generate_synthetic_with_truth(spec, seed).map(|(c, _)| c)
}

// Stop-word-only sentence frames; `{}` receives the question body.
const FRAMES: [&str; 10] = [
    "What is {}?",
    "How about {}?",
    "Can you do {} for me?",
    "What about the {}?",
    "Is there any more on {}?",
    "How do I do {}?",
    "Why is it that {}?",
    "{}?",
    "So, what are {} then?",
    "Should I do {} or not?",
];

// Padding words, all stop words.
const FILLER: &str = "so what should i do about this and how should i do it if i can do it at all \
    is there any more that you can do for me here because i have been doing it over and over again \
    but it is not what i should be doing and you are who can do it for me now";

const ANSWER_WORDS: [&str; 24] = [
    "the", "model", "answer", "result", "system", "value", "process", "data", "example", "method",
    "approach", "step", "first", "then", "which", "important", "can", "use", "this", "case",
    "should", "consider", "detail", "overall",
];

struct Vocabulary {
    topic_keywords: Vec<Vec<String>>,
    specific: Vec<String>,
}

fn pseudo_words(rng: &mut ChaCha8Rng, n: usize, exclude: &StopWords, seen: &mut HashSet<String>) -> Vec<String> {
    const CONS: &[u8] = b"bdfgklmnprstvz";
    const VOWELS: &[u8] = b"aeiou";
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let syllables = rng.random_range(2..=3);
        let mut w = String::new();
        for _ in 0..syllables {
            w.push(CONS[rng.random_range(0..CONS.len())] as char);
            w.push(VOWELS[rng.random_range(0..VOWELS.len())] as char);
        }
        if rng.random_bool(0.5) {
            w.push(CONS[rng.random_range(0..CONS.len())] as char);
        }
        if !exclude.contains(&w) && seen.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

fn vocabulary(spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> Vocabulary {
    let stop = StopWords::english();
    let mut seen = HashSet::new();
    let topic_keywords = (0..spec.topics)
        .map(|_| pseudo_words(rng, spec.topic_keywords, &stop, &mut seen))
        .collect();
    let specific = pseudo_words(rng, 6000.max(spec.specific_words * 50), &stop, &mut seen);
    Vocabulary {
        topic_keywords,
        specific,
    }
}

fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    chars
        .next()
        .map(|c| c.to_uppercase().chain(chars).collect())
        .unwrap_or_default()
}

fn render_query(body: &[String], rng: &mut ChaCha8Rng, target_tokens: u64) -> String {
    let capitalized: String;
    let mut words: Vec<&str> = body.iter().map(String::as_str).collect();
    words.shuffle(rng);
    if rng.random_bool(0.5) {
        if let Some(first) = words.first_mut() {
            capitalized = capitalize(first);
            *first = &capitalized;
        }
    }
    let frame = FRAMES.choose(rng).expect("non-empty");
    let mut text = frame.replace("{}", &words.join(" "));
    let mut tokens = count_tokens(&text);
    if tokens < target_tokens {
        let filler: Vec<&str> = FILLER.split_whitespace().collect();
        let mut at = rng.random_range(0..filler.len());
        text.push_str(" And");
        tokens += 1;
        while tokens < target_tokens {
            text.push(' ');
            text.push_str(filler[at]);
            at = (at + 1) % filler.len();
            tokens += 1;
        }
    }
    text
}

fn render_answer(rng: &mut ChaCha8Rng, target_tokens: u64) -> String {
    let target = target_tokens.max(2);
    let mut text = String::with_capacity(target as usize * 7);
    let mut tokens = 0;
    let mut since_period = 0;
    // leave room for the closing period
    while tokens + 1 < target {
        if since_period >= 14 && tokens + 2 < target {
            text.push('.');
            tokens += 1;
            since_period = 0;
        }
        if !text.is_empty() {
            text.push(' ');
        }
        text.push_str(ANSWER_WORDS.choose(rng).expect("non-empty"));
        tokens += 1;
        since_period += 1;
    }
    text.push('.');
    text
}

fn sample_tokens(dist: &LogNormal<f64>, rng: &mut ChaCha8Rng) -> u64 {
    dist.sample(rng).round().max(1.0) as u64
}

struct Pool {
    bodies: Vec<(u64, Vec<String>)>,
}

/// Generates a corpus together with its ground truth. Pure in `(spec, seed)`.
pub fn generate_synthetic_with_truth(
    spec: &SyntheticSpec,
    seed: u64,
) -> Result<(TraceCorpus, SyntheticTruth), TraceError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab = vocabulary(spec, &mut rng);

    let invalid = |e: rand_distr::NormalError| TraceError::InvalidSpec(e.to_string());
    let q_dist = LogNormal::new(spec.query_tokens.median.ln(), spec.query_tokens.sigma).map_err(invalid)?;
    let a_dist = LogNormal::new(spec.answer_tokens.median.ln(), spec.answer_tokens.sigma).map_err(invalid)?;
    let extra_rounds = if spec.rounds.mean > 1.0 {
        Some(
            Poisson::new(spec.rounds.mean - 1.0)
                .map_err(|e| TraceError::InvalidSpec(e.to_string()))?,
        )
    } else {
        None
    };

    let depth = spec.pool_depth as usize;
    let mut pools: Vec<Pool> = (0..spec.hot_topics * depth)
        .map(|_| Pool { bodies: Vec::new() })
        .collect();
    let zipf: Vec<f64> = (0..spec.pool_size.max(1))
        .map(|i| 1.0 / ((i + 1) as f64).powf(spec.pool_skew))
        .collect();

    let topic_dist = WeightedIndex::new(spec.topic_weights()).expect("positive topic weights");
    let dup_probability: Vec<f64> = (0..spec.topics).map(|t| spec.topic_duplicate_probability(t)).collect();
    let mut next_question = 0u64;
    let mut conversations = Vec::with_capacity(spec.conversations);
    let mut truth = SyntheticTruth {
        topics: Vec::with_capacity(spec.conversations),
        question_ids: Vec::with_capacity(spec.conversations),
        planted_duplicates: Vec::with_capacity(spec.conversations),
    };

    for c in 0..spec.conversations {
        let topic = topic_dist.sample(&mut rng);
        let n_rounds = loop {
            let n = 1 + extra_rounds.map_or(0, |p| p.sample(&mut rng) as u32);
            if n <= spec.rounds.max {
                break n;
            }
        };
        let dup_p = dup_probability[topic];
        let mut pairs = Vec::with_capacity(n_rounds as usize);
        let mut ids = Vec::with_capacity(n_rounds as usize);
        let mut planted = Vec::with_capacity(n_rounds as usize);

        for r in 1..=n_rounds {
            let early = r as usize <= depth;
            let wants_dup = early && dup_p > 0.0 && rng.random_bool(dup_p);
            let pool_slot = (topic < spec.hot_topics && early).then(|| topic * depth + r as usize - 1);

            let reuse = match pool_slot {
                Some(slot) if wants_dup && !pools[slot].bodies.is_empty() => {
                    let pool = &pools[slot];
                    let weights = WeightedIndex::new(&zipf[..pool.bodies.len()]).expect("positive weights");
                    Some(pool.bodies[weights.sample(&mut rng)].clone())
                }
                _ => None,
            };

            let (qid, body, is_dup) = match reuse {
                Some((qid, body)) => (qid, body, true),
                None => {
                    let mut body = vocab.topic_keywords[topic].clone();
                    body.extend(
                        vocab
                            .specific
                            .choose_multiple(&mut rng, spec.specific_words)
                            .cloned(),
                    );
                    let qid = next_question;
                    next_question += 1;
                    if let Some(slot) = pool_slot {
                        if pools[slot].bodies.len() < spec.pool_size {
                            pools[slot].bodies.push((qid, body.clone()));
                        }
                    }
                    (qid, body, false)
                }
            };

            let q_target = sample_tokens(&q_dist, &mut rng);
            let a_target = sample_tokens(&a_dist, &mut rng);
            let query = render_query(&body, &mut rng, q_target);
            let answer = render_answer(&mut rng, a_target);
            pairs.push((query, answer));
            ids.push(qid);
            planted.push(is_dup);
        }

        let category = spec.categories[topic % spec.categories.len()].clone();
        conversations.push(Conversation::new(format!("conv-{c:06}"), Some(category), pairs)?);
        truth.topics.push(topic);
        truth.question_ids.push(ids);
        truth.planted_duplicates.push(planted);
    }

    Ok((TraceCorpus::new(conversations), truth))
}
