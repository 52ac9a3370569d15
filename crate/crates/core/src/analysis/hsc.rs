use std::collections::HashMap;

use rayon::prelude::*;

use super::pattern::{rank_patterns, Algorithm, PatternSet, QueryId, Rank, SemanticPattern, PATTERN_SET_VERSION};
use super::{AnalysisConfig, AnalysisError, ClusteringMethod};
use crate::cluster::{dbscan, kmeans, Clustering, DbscanParams, KMeansParams};
use crate::metrics::processed_tokens;
use crate::text::embed::cosine_unchecked;
use crate::text::QueryEncoder;
use crate::trace::TraceCorpus;

/// Share of processed tokens, `C(q)`, belonging to items that have an
/// earlier item with cosine similarity at least `threshold`. Items must be
/// in corpus order. An empty slice, or one with no tokens, scores 0.
pub fn token_saving_ratio_of(items: &[(u64, &[f64])], threshold: f64) -> f64 {
    let total: u64 = items.iter().map(|(c, _)| c).sum();
    if total == 0 {
        return 0.0;
    }
    let saved: u64 = items
        .iter()
        .enumerate()
        .filter(|(i, (_, v))| items[..*i].iter().any(|(_, u)| cosine_unchecked(v, u) >= threshold))
        .map(|(_, (c, _))| c)
        .sum();
    saved as f64 / total as f64
}

/// Token-saving ratio of an existing pattern, re-embedding its members.
/// Members are taken in corpus order; ones that fail to embed never match.
pub fn pattern_token_saving_ratio(
    pattern: &SemanticPattern,
    corpus: &TraceCorpus,
    encoder: &dyn QueryEncoder,
    threshold: f64,
) -> Result<f64, AnalysisError> {
    let position: HashMap<&str, usize> = corpus
        .conversations()
        .iter()
        .enumerate()
        .map(|(i, c)| (c.id.as_str(), i))
        .collect();
    let mut resolved = Vec::with_capacity(pattern.members.len());
    for m in &pattern.members {
        let unknown = || AnalysisError::UnknownQuery {
            conversation: m.conversation.clone(),
            round: m.round,
        };
        let &i = position.get(m.conversation.as_str()).ok_or_else(unknown)?;
        let conv = &corpus.conversations()[i];
        let round = conv.round(m.round).ok_or_else(unknown)?;
        let v = encoder.encode(&round.query_text).map(|v| v.into_inner()).unwrap_or_default();
        resolved.push((i, processed_tokens(conv, m.round), v));
    }
    resolved.sort_by_key(|(i, _, _)| *i);
    let items: Vec<(u64, &[f64])> = resolved.iter().map(|(_, c, v)| (*c, v.as_slice())).collect();
    Ok(token_saving_ratio_of(&items, threshold))
}

/// Query embeddings indexed `[conversation][round - 1]`; `None` where
/// embedding failed.
struct Embedded<'a> {
    corpus: &'a TraceCorpus,
    vectors: Vec<Vec<Option<Vec<f64>>>>,
}

impl<'a> Embedded<'a> {
    fn new(corpus: &'a TraceCorpus, encoder: &dyn QueryEncoder) -> Self {
        let vectors = corpus
            .conversations()
            .par_iter()
            .map(|c| {
                c.rounds
                    .iter()
                    .map(|r| encoder.encode(&r.query_text).ok().map(|v| v.into_inner()))
                    .collect()
            })
            .collect();
        Self { corpus, vectors }
    }

    fn get(&self, conv: usize, round: u32) -> Option<&[f64]> {
        self.vectors[conv].get(round as usize - 1)?.as_deref()
    }

    /// Conversations with an embedded query at `round`, in corpus order.
    fn at_round(&self, round: u32) -> Vec<usize> {
        (0..self.vectors.len()).filter(|&c| self.get(c, round).is_some()).collect()
    }
}

struct Built {
    pattern: SemanticPattern,
    convs: Vec<usize>,
}

struct RoundContext<'e, 'a> {
    emb: &'e Embedded<'a>,
    config: &'e AnalysisConfig,
    round: u32,
    round_total: usize,
    next_id: usize,
}

impl RoundContext<'_, '_> {
    fn cluster(&self, points: &[&[f64]], k: usize, seed: u64) -> Result<Clustering, AnalysisError> {
        Ok(match self.config.clustering {
            ClusteringMethod::Kmeans { max_iters } => kmeans(
                points,
                KMeansParams {
                    k: k.min(points.len()),
                    max_iters,
                    seed,
                },
            )?,
            ClusteringMethod::Dbscan { eps, min_pts } => dbscan(points, DbscanParams { eps, min_pts })?,
        })
    }

    /// Clusters the round's queries of `convs` into at most `k` patterns,
    /// plus an "other" pattern for density noise.
    fn build(&mut self, convs: &[usize], k: usize, seed: u64, parent: Option<usize>) -> Result<Vec<Built>, AnalysisError> {
        let points: Vec<&[f64]> = convs
            .iter()
            .map(|&c| self.emb.get(c, self.round).expect("caller passes embedded queries"))
            .collect();
        let clustering = self.cluster(&points, k, seed)?;

        let mut groups: Vec<(bool, Vec<usize>)> = (0..clustering.k())
            .map(|c| (false, clustering.members(c).collect()))
            .collect();
        let noise: Vec<usize> = clustering.noise().collect();
        if !noise.is_empty() {
            groups.push((true, noise));
        }

        let mut out = Vec::with_capacity(groups.len());
        for (is_noise, idx) in groups {
            if idx.is_empty() {
                continue;
            }
            let member_convs: Vec<usize> = idx.iter().map(|&i| convs[i]).collect();
            let member_points: Vec<&[f64]> = idx.iter().map(|&i| points[i]).collect();
            let centroid = crate::cluster::mean_centroid(&member_points);
            let items: Vec<(u64, &[f64])> = member_convs
                .iter()
                .zip(&member_points)
                .map(|(&c, v)| (processed_tokens(&self.emb.corpus.conversations()[c], self.round), *v))
                .collect();
            let pattern = SemanticPattern {
                round: self.round,
                id: self.next_id,
                parent,
                noise: is_noise,
                centroid,
                members: member_convs
                    .iter()
                    .map(|&c| QueryId {
                        conversation: self.emb.corpus.conversations()[c].id.clone(),
                        round: self.round,
                    })
                    .collect(),
                token_saving_ratio: token_saving_ratio_of(&items, self.config.similarity_threshold),
                proportion: member_convs.len() as f64 / self.round_total as f64,
                rank: Rank::Unranked,
                survived: false,
            };
            self.next_id += 1;
            out.push(Built {
                pattern,
                convs: member_convs,
            });
        }
        Ok(out)
    }
}

fn round_seed(base: u64, round: u32, parent: usize) -> u64 {
    base.wrapping_add((round as u64) << 32).wrapping_add(parent as u64)
}

fn finish(
    algorithm: Algorithm,
    encoder: &dyn QueryEncoder,
    config: &AnalysisConfig,
    mut rounds: Vec<Vec<SemanticPattern>>,
) -> PatternSet {
    rank_patterns(&mut rounds, config.rank_cuts, config.rank_scope);
    PatternSet {
        version: PATTERN_SET_VERSION,
        algorithm,
        embedder: encoder.embedder_name().to_string(),
        config: config.clone(),
        rounds,
    }
}

/// Comprehensive hierarchy: every round up to `max_rounds` is clustered
/// into `k` patterns (fewer when the round has fewer queries).
pub fn co_hsc(corpus: &TraceCorpus, encoder: &dyn QueryEncoder, config: &AnalysisConfig) -> Result<PatternSet, AnalysisError> {
    config.validate()?;
    let emb = Embedded::new(corpus, encoder);
    let last = config.max_rounds.min(corpus.max_rounds() as u32);
    let mut rounds = Vec::new();
    for round in 1..=last {
        let convs = emb.at_round(round);
        if convs.is_empty() {
            break;
        }
        let mut ctx = RoundContext {
            emb: &emb,
            config,
            round,
            round_total: convs.len(),
            next_id: 0,
        };
        let built = ctx.build(&convs, config.k, round_seed(config.seed, round, 0), None)?;
        rounds.push(built.into_iter().map(|b| b.pattern).collect());
    }
    if rounds.is_empty() {
        return Err(AnalysisError::EmptyCorpus);
    }
    Ok(finish(Algorithm::CoHsc, encoder, config, rounds))
}

/// Selective hierarchy: only patterns passing the survival rule have their
/// follow-up queries clustered, into `ceil(tp / r)` children each. Stops at
/// the first round in which nothing survives.
pub fn se_hsc(corpus: &TraceCorpus, encoder: &dyn QueryEncoder, config: &AnalysisConfig) -> Result<PatternSet, AnalysisError> {
    config.validate()?;
    let emb = Embedded::new(corpus, encoder);
    let last = config.max_rounds.min(corpus.max_rounds() as u32);

    let first = emb.at_round(1);
    if first.is_empty() {
        return Err(AnalysisError::EmptyCorpus);
    }
    let mut ctx = RoundContext {
        emb: &emb,
        config,
        round: 1,
        round_total: first.len(),
        next_id: 0,
    };
    let mut built = ctx.build(&first, config.tp, round_seed(config.seed, 1, 0), None)?;
    let mut rounds = Vec::new();

    for round in 2..=last + 1 {
        let mut survivors = Vec::new();
        for b in &mut built {
            b.pattern.survived = !b.pattern.noise
                && config
                    .survival
                    .survives(b.pattern.token_saving_ratio, b.pattern.proportion, config.ts, config.te);
            if b.pattern.survived {
                survivors.push((b.pattern.id, std::mem::take(&mut b.convs)));
            }
        }
        rounds.push(built.into_iter().map(|b| b.pattern).collect::<Vec<_>>());
        if survivors.is_empty() || round > last {
            break;
        }

        let mut ctx = RoundContext {
            emb: &emb,
            config,
            round,
            round_total: emb.at_round(round).len(),
            next_id: 0,
        };
        let k = config.tp.div_ceil(round as usize);
        built = Vec::new();
        for (parent, parent_convs) in survivors {
            let cont: Vec<usize> = parent_convs
                .into_iter()
                .filter(|&c| emb.get(c, round).is_some())
                .collect();
            if cont.is_empty() {
                continue;
            }
            built.extend(ctx.build(&cont, k, round_seed(config.seed, round, parent), Some(parent))?);
        }
        if built.is_empty() {
            break;
        }
    }
    Ok(finish(Algorithm::SeHsc, encoder, config, rounds))
}

pub fn analyze(
    algorithm: Algorithm,
    corpus: &TraceCorpus,
    encoder: &dyn QueryEncoder,
    config: &AnalysisConfig,
) -> Result<PatternSet, AnalysisError> {
    match algorithm {
        Algorithm::CoHsc => co_hsc(corpus, encoder, config),
        Algorithm::SeHsc => se_hsc(corpus, encoder, config),
    }
}
