use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{centroids_of, check_points, wcss, ClusterError, Clustering, Label};
use crate::text::embed::cosine_unchecked;

/// Density clustering under cosine distance `1 - cos`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DbscanParams {
    #[serde(default = "default_eps")]
    pub eps: f64,
    /// Neighbourhood size, the point itself included, that makes a core point.
    #[serde(default = "default_min_pts")]
    pub min_pts: usize,
}

fn default_eps() -> f64 {
    0.10
}

fn default_min_pts() -> usize {
    3
}

impl Default for DbscanParams {
    fn default() -> Self {
        Self {
            eps: default_eps(),
            min_pts: default_min_pts(),
        }
    }
}

/// Points are visited in input order and border points join the first
/// cluster that reaches them, so labels are deterministic.
pub fn dbscan<P: AsRef<[f64]> + Sync>(points: &[P], params: DbscanParams) -> Result<Clustering, ClusterError> {
    let dim = check_points(points)?;
    if !(params.eps >= 0.0) || params.min_pts == 0 {
        return Err(ClusterError::InvalidParameter(format!(
            "eps {} / min_pts {}",
            params.eps, params.min_pts
        )));
    }
    let neighbours: Vec<Vec<usize>> = (0..points.len())
        .into_par_iter()
        .map(|i| {
            (0..points.len())
                .filter(|&j| 1.0 - cosine_unchecked(points[i].as_ref(), points[j].as_ref()) <= params.eps)
                .collect()
        })
        .collect();

    let mut labels: Vec<Option<Label>> = vec![None; points.len()];
    let mut k = 0;
    for i in 0..points.len() {
        if labels[i].is_some() {
            continue;
        }
        if neighbours[i].len() < params.min_pts {
            labels[i] = Some(Label::Noise);
            continue;
        }
        let cluster = Label::Cluster(k);
        k += 1;
        labels[i] = Some(cluster);
        let mut queue: VecDeque<usize> = neighbours[i].iter().copied().collect();
        while let Some(j) = queue.pop_front() {
            match labels[j] {
                Some(Label::Noise) => labels[j] = Some(cluster),
                None => {
                    labels[j] = Some(cluster);
                    if neighbours[j].len() >= params.min_pts {
                        queue.extend(neighbours[j].iter().copied());
                    }
                }
                Some(Label::Cluster(_)) => {}
            }
        }
    }

    let labels: Vec<Label> = labels.into_iter().map(|l| l.unwrap_or(Label::Noise)).collect();
    let centroids = centroids_of(points, &labels, k, dim);
    let w = wcss(points, &labels, &centroids);
    Ok(Clustering {
        labels,
        centroids,
        wcss_history: vec![w],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(deg: f64) -> Vec<f64> {
        let r = deg.to_radians();
        vec![r.cos(), r.sin()]
    }

    #[test]
    fn dense_groups_and_an_outlier() {
        // 1 - cos(5deg) ~ 0.0038, 1 - cos(90deg) = 1
        let pts = vec![unit(0.0), unit(2.0), unit(4.0), unit(90.0), unit(92.0), unit(94.0), unit(200.0)];
        let r = dbscan(&pts, DbscanParams::default()).unwrap();
        assert_eq!(r.k(), 2);
        assert_eq!(&r.labels[..3], &[Label::Cluster(0); 3]);
        assert_eq!(&r.labels[3..6], &[Label::Cluster(1); 3]);
        assert_eq!(r.labels[6], Label::Noise);
        assert_eq!(r.noise().collect::<Vec<_>>(), vec![6]);
    }

    #[test]
    fn border_point_is_claimed_but_does_not_expand() {
        // with min_pts 3 only 1 and 2 are core; 0 and 3 join as borders
        let pts = vec![unit(0.0), unit(20.0), unit(40.0), unit(60.0)];
        let eps = 1.0 - 21f64.to_radians().cos();
        let r = dbscan(&pts, DbscanParams { eps, min_pts: 3 }).unwrap();
        assert_eq!(r.labels, vec![Label::Cluster(0), Label::Cluster(0), Label::Cluster(0), Label::Cluster(0)]);
        let r = dbscan(&pts, DbscanParams { eps, min_pts: 4 }).unwrap();
        assert!(r.labels.iter().all(|l| *l == Label::Noise));
        assert_eq!(r.k(), 0);
    }

    #[test]
    fn zero_vectors_are_noise() {
        let pts = vec![vec![0.0, 0.0]; 5];
        let r = dbscan(&pts, DbscanParams::default()).unwrap();
        assert!(r.labels.iter().all(|l| *l == Label::Noise));
    }

    #[test]
    fn rejects_bad_parameters() {
        let pts = vec![unit(0.0)];
        assert!(dbscan(&pts, DbscanParams { eps: -0.1, min_pts: 3 }).is_err());
        assert!(dbscan(&pts, DbscanParams { eps: 0.1, min_pts: 0 }).is_err());
    }
}
