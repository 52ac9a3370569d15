use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{centroids_of, check_points, squared_distance, wcss, Centroid, ClusterError, Clustering, Label};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KMeansParams {
    pub k: usize,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_max_iters() -> usize {
    100
}

impl KMeansParams {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            max_iters: default_max_iters(),
            seed,
        }
    }
}

/// k-means++ seeding followed by Lloyd iterations.
///
/// A point only moves when another centroid is strictly closer, and ties
/// resolve to the lowest cluster id, so the result is a pure function of the
/// points and `params`. A cluster that empties out is reseeded with the point
/// farthest from its own centroid among clusters with more than one member.
pub fn kmeans<P: AsRef<[f64]>>(points: &[P], params: KMeansParams) -> Result<Clustering, ClusterError> {
    let n = points.len();
    let dim = check_points(points)?;
    if params.k == 0 || params.k > n {
        return Err(ClusterError::InvalidK { k: params.k, n });
    }
    if params.max_iters == 0 {
        return Err(ClusterError::InvalidParameter("max_iters must be positive".into()));
    }
    let k = params.k;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut centroids = seed_plus_plus(points, k, &mut rng);

    let mut labels = vec![Label::Noise; n];
    let mut history = Vec::new();
    for _ in 0..params.max_iters {
        let mut moved = 0;
        for (i, p) in points.iter().enumerate() {
            let (best, best_d) = closest(p.as_ref(), &centroids);
            match labels[i] {
                Label::Cluster(cur) => {
                    if best != cur && best_d < squared_distance(p.as_ref(), &centroids[cur].vector) {
                        labels[i] = Label::Cluster(best);
                        moved += 1;
                    }
                }
                Label::Noise => {
                    labels[i] = Label::Cluster(best);
                    moved += 1;
                }
            }
        }
        centroids = centroids_of(points, &labels, k, dim);
        reseed_empty(points, &mut labels, &mut centroids, dim);
        history.push(wcss(points, &labels, &centroids));
        if moved == 0 {
            break;
        }
    }

    Ok(Clustering {
        labels,
        centroids,
        wcss_history: history,
    })
}

fn closest(p: &[f64], centroids: &[Centroid]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, cent) in centroids.iter().enumerate() {
        let d = squared_distance(p, &cent.vector);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn seed_plus_plus<P: AsRef<[f64]>>(points: &[P], k: usize, rng: &mut ChaCha8Rng) -> Vec<Centroid> {
    let n = points.len();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = points
        .iter()
        .map(|p| squared_distance(p.as_ref(), points[chosen[0]].as_ref()))
        .collect();
    while chosen.len() < k {
        let next = match WeightedIndex::new(&d2) {
            Ok(w) => w.sample(rng),
            // every remaining point coincides with a chosen one
            Err(_) => {
                let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
                free[rng.random_range(0..free.len())]
            }
        };
        chosen.push(next);
        for (i, p) in points.iter().enumerate() {
            let d = squared_distance(p.as_ref(), points[next].as_ref());
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }
    chosen
        .into_iter()
        .map(|i| Centroid {
            vector: points[i].as_ref().to_vec(),
            member_count: 0,
        })
        .collect()
}

fn reseed_empty<P: AsRef<[f64]>>(points: &[P], labels: &mut [Label], centroids: &mut Vec<Centroid>, dim: usize) {
    let k = centroids.len();
    loop {
        let Some(empty) = centroids.iter().position(|c| c.member_count == 0) else {
            return;
        };
        let mut far: Option<(usize, f64)> = None;
        for (i, p) in points.iter().enumerate() {
            let Label::Cluster(c) = labels[i] else { continue };
            if centroids[c].member_count < 2 {
                continue;
            }
            let d = squared_distance(p.as_ref(), &centroids[c].vector);
            if far.is_none_or(|(_, fd)| d > fd) {
                far = Some((i, d));
            }
        }
        let Some((i, _)) = far else { return };
        labels[i] = Label::Cluster(empty);
        *centroids = centroids_of(points, labels, k, dim);
    }
}
