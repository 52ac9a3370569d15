use serde::{Deserialize, Serialize};

use super::AnalysisError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ClusteringMethod {
    Kmeans {
        #[serde(default = "default_max_iters")]
        max_iters: usize,
    },
    /// The produced cluster count replaces `k` / `tp`; noise points form an
    /// extra "other" pattern that is never ranked.
    Dbscan {
        #[serde(default = "default_eps")]
        eps: f64,
        #[serde(default = "default_min_pts")]
        min_pts: usize,
    },
}

fn default_max_iters() -> usize {
    100
}
fn default_eps() -> f64 {
    0.10
}
fn default_min_pts() -> usize {
    3
}

impl Default for ClusteringMethod {
    fn default() -> Self {
        ClusteringMethod::Kmeans {
            max_iters: default_max_iters(),
        }
    }
}

/// When a selective-hierarchy pattern is extended to the next round.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SurvivalRule {
    /// Extend iff `tsr >= ts` and `proportion > te`.
    #[default]
    SavingAndWeight,
    /// Extend iff `tsr < ts` and `proportion > te`: the removal test read as
    /// "remove when `tsr >= ts` or `proportion <= te`". Kept for comparison.
    Literal,
}

impl SurvivalRule {
    pub fn survives(self, token_saving_ratio: f64, proportion: f64, ts: f64, te: f64) -> bool {
        match self {
            SurvivalRule::SavingAndWeight => token_saving_ratio >= ts && proportion > te,
            SurvivalRule::Literal => token_saving_ratio < ts && proportion > te,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RankScope {
    /// Rank all patterns of all rounds against each other.
    #[default]
    Global,
    PerRound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Patterns per round for the comprehensive hierarchy.
    pub k: usize,
    /// Deepest round analyzed.
    pub max_rounds: u32,
    /// Token-saving-ratio threshold for extending a pattern.
    pub ts: f64,
    /// Proportion threshold for extending a pattern.
    pub te: f64,
    /// Round-1 pattern count for the selective hierarchy; round `r` splits
    /// each surviving parent into `ceil(tp / r)` children.
    pub tp: usize,
    pub similarity_threshold: f64,
    /// Cumulative cut points for High, Mid and Low.
    pub rank_cuts: [f64; 3],
    /// Classification accepts a pattern when the centroid similarity is at
    /// least `classify_relaxation * similarity_threshold`.
    pub classify_relaxation: f64,
    pub clustering: ClusteringMethod,
    pub survival: SurvivalRule,
    pub rank_scope: RankScope,
    pub seed: u64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            k: 20,
            max_rounds: 10,
            ts: 0.20,
            te: 0.05,
            tp: 20,
            similarity_threshold: 0.90,
            rank_cuts: [0.25, 0.50, 0.75],
            classify_relaxation: 0.9,
            clustering: ClusteringMethod::default(),
            survival: SurvivalRule::default(),
            rank_scope: RankScope::default(),
            seed: 0,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<(), AnalysisError> {
        let bad = |m: String| Err(AnalysisError::InvalidConfig(m));
        let open_unit = |x: f64| x > 0.0 && x < 1.0;
        if !open_unit(self.ts) {
            return bad(format!("ts = {} must lie in (0, 1)", self.ts));
        }
        if !open_unit(self.te) {
            return bad(format!("te = {} must lie in (0, 1)", self.te));
        }
        if self.tp == 0 {
            return bad("tp must be at least 1".into());
        }
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if self.max_rounds == 0 {
            return bad("max_rounds must be at least 1".into());
        }
        if !(self.similarity_threshold > 0.0 && self.similarity_threshold <= 1.0) {
            return bad(format!("similarity_threshold = {} must lie in (0, 1]", self.similarity_threshold));
        }
        let [a, b, c] = self.rank_cuts;
        if !(0.0 < a && a < b && b < c && c <= 1.0) {
            return bad(format!("rank_cuts {:?} must be strictly increasing in (0, 1]", self.rank_cuts));
        }
        if !(self.classify_relaxation > 0.0 && self.classify_relaxation <= 1.0) {
            return bad(format!("classify_relaxation = {} must lie in (0, 1]", self.classify_relaxation));
        }
        match self.clustering {
            ClusteringMethod::Kmeans { max_iters: 0 } => bad("clustering.max_iters must be positive".into()),
            ClusteringMethod::Dbscan { eps, min_pts } if !(eps > 0.0) || min_pts == 0 => {
                bad(format!("clustering eps = {eps} must be > 0 and min_pts = {min_pts} >= 1"))
            }
            _ => Ok(()),
        }
    }

    /// Similarity below which a query is not assigned to any pattern.
    pub fn classification_threshold(&self) -> f64 {
        self.similarity_threshold * self.classify_relaxation
    }
}
