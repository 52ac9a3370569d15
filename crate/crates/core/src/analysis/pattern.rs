use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AnalysisConfig, AnalysisError, RankScope};
use crate::cluster::Centroid;
use crate::text::embed::cosine_unchecked;

pub const PATTERN_SET_VERSION: u64 = 1;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rank {
    High,
    Mid,
    Low,
    #[default]
    Unranked,
}

impl Rank {
    pub fn as_str(self) -> &'static str {
        match self {
            Rank::High => "high",
            Rank::Mid => "mid",
            Rank::Low => "low",
            Rank::Unranked => "unranked",
        }
    }
}

/// A query addressed by conversation id and 1-based round.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QueryId {
    pub conversation: String,
    pub round: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PatternRef {
    pub round: u32,
    pub id: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticPattern {
    pub round: u32,
    /// Unique within its round.
    pub id: usize,
    /// Parent pattern id in the previous round (selective hierarchy only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<usize>,
    /// The "other" bucket collecting density-clustering noise.
    #[serde(default)]
    pub noise: bool,
    pub centroid: Centroid,
    pub members: Vec<QueryId>,
    pub token_saving_ratio: f64,
    /// Members over all queries of this round.
    pub proportion: f64,
    pub rank: Rank,
    /// Whether the pattern passed the selective hierarchy's survival test and
    /// so had its follow-up queries clustered.
    #[serde(default)]
    pub survived: bool,
}

impl SemanticPattern {
    pub fn reference(&self) -> PatternRef {
        PatternRef {
            round: self.round,
            id: self.id,
        }
    }
}

/// The economics of one pattern, without its members.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetaPatternInfo {
    pub pattern: PatternRef,
    pub token_saving_ratio: f64,
    pub proportion: f64,
    pub rank: Rank,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    CoHsc,
    SeHsc,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::CoHsc => "co-hsc",
            Algorithm::SeHsc => "se-hsc",
        }
    }
}

/// Mined patterns per round. `rounds[r - 1]` holds round `r`, sorted by
/// token-saving ratio, highest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternSet {
    pub version: u64,
    pub algorithm: Algorithm,
    pub embedder: String,
    pub config: AnalysisConfig,
    pub rounds: Vec<Vec<SemanticPattern>>,
}

impl PatternSet {
    pub fn deepest_round(&self) -> u32 {
        self.rounds.len() as u32
    }

    pub fn round(&self, round: u32) -> &[SemanticPattern] {
        round
            .checked_sub(1)
            .and_then(|i| self.rounds.get(i as usize))
            .map_or(&[], Vec::as_slice)
    }

    pub fn get(&self, r: PatternRef) -> Option<&SemanticPattern> {
        self.round(r.round).iter().find(|p| p.id == r.id)
    }

    pub fn patterns(&self) -> impl Iterator<Item = &SemanticPattern> {
        self.rounds.iter().flatten()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.iter().all(Vec::is_empty)
    }

    /// Meta information per round in stored (descending ratio) order.
    pub fn meta(&self) -> Vec<Vec<MetaPatternInfo>> {
        self.rounds
            .iter()
            .map(|round| {
                round
                    .iter()
                    .map(|p| MetaPatternInfo {
                        pattern: p.reference(),
                        token_saving_ratio: p.token_saving_ratio,
                        proportion: p.proportion,
                        rank: p.rank,
                    })
                    .collect()
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("pattern sets serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, AnalysisError> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| AnalysisError::Parse(e.to_string()))?;
        let found = value
            .get("version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| AnalysisError::Parse("missing integer field `version`".into()))?;
        if found != PATTERN_SET_VERSION {
            return Err(AnalysisError::Version {
                found,
                expected: PATTERN_SET_VERSION,
            });
        }
        serde_json::from_value(value).map_err(|e| AnalysisError::Parse(e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), AnalysisError> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, AnalysisError> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

/// Rank for each position of a list of `n` items sorted best first.
/// Position `p` (1-based) is High when `p <= ceil(cuts[0] * n)`, Mid when
/// `p <= ceil(cuts[1] * n)`, Low when `p <= ceil(cuts[2] * n)`.
pub fn rank_positions(n: usize, cuts: [f64; 3]) -> Vec<Rank> {
    // the epsilon keeps 0.75 * 100 from becoming 76 through rounding noise
    let bound = |c: f64| ((c * n as f64) - 1e-9).ceil().max(0.0) as usize;
    let [h, m, l] = cuts.map(bound);
    (1..=n)
        .map(|p| match p {
            p if p <= h => Rank::High,
            p if p <= m => Rank::Mid,
            p if p <= l => Rank::Low,
            _ => Rank::Unranked,
        })
        .collect()
}

/// Sorts every round by token-saving ratio (descending, stable) and assigns
/// ranks, either pooled over all rounds or per round. Noise patterns are
/// always Unranked and take no position.
pub fn rank_patterns(rounds: &mut [Vec<SemanticPattern>], cuts: [f64; 3], scope: RankScope) {
    for round in rounds.iter_mut() {
        round.sort_by(|a, b| b.token_saving_ratio.total_cmp(&a.token_saving_ratio));
    }
    let mut groups: Vec<Vec<(usize, usize)>> = Vec::new();
    for (r, round) in rounds.iter().enumerate() {
        let slots: Vec<(usize, usize)> = round
            .iter()
            .enumerate()
            .filter(|(_, p)| !p.noise)
            .map(|(i, _)| (r, i))
            .collect();
        match scope {
            RankScope::PerRound => groups.push(slots),
            RankScope::Global => {
                if groups.is_empty() {
                    groups.push(Vec::new());
                }
                groups[0].extend(slots);
            }
        }
    }
    for round in rounds.iter_mut() {
        for p in round.iter_mut() {
            p.rank = Rank::Unranked;
        }
    }
    for mut group in groups {
        group.sort_by(|a, b| {
            rounds[b.0][b.1]
                .token_saving_ratio
                .total_cmp(&rounds[a.0][a.1].token_saving_ratio)
        });
        for ((r, i), rank) in group.iter().zip(rank_positions(group.len(), cuts)) {
            rounds[*r][*i].rank = rank;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub pattern: Option<PatternRef>,
    pub rank: Rank,
    /// Similarity to the nearest centroid considered; 0 when none was.
    pub similarity: f64,
}

/// Nearest-centroid classification against the patterns of
/// `min(round, deepest analyzed round)`. Ties go to the lowest pattern id.
pub fn classify_query(set: &PatternSet, round: u32, v: &[f64]) -> Classification {
    let none = |similarity| Classification {
        pattern: None,
        rank: Rank::Unranked,
        similarity,
    };
    let r = round.clamp(1, set.deepest_round().max(1));
    let mut best: Option<(&SemanticPattern, f64)> = None;
    for p in set.round(r).iter().filter(|p| !p.noise && p.centroid.vector.len() == v.len()) {
        let s = cosine_unchecked(v, &p.centroid.vector);
        let better = match best {
            None => true,
            Some((b, bs)) => s > bs || (s == bs && p.id < b.id),
        };
        if better {
            best = Some((p, s));
        }
    }
    match best {
        Some((p, s)) if s >= set.config.classification_threshold() && s > 0.0 => Classification {
            pattern: Some(p.reference()),
            rank: p.rank,
            similarity: s,
        },
        Some((_, s)) => none(s),
        None => none(0.0),
    }
}
