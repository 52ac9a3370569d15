//! Clustering of embedding vectors: seeded k-means and cosine DBSCAN.

mod dbscan;
mod kmeans;

pub use dbscan::{dbscan, DbscanParams};
pub use kmeans::{kmeans, KMeansParams};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::embed::cosine_unchecked;

#[derive(Debug, Error, PartialEq)]
pub enum ClusterError {
    #[error("cannot cluster an empty set of points")]
    EmptyInput,
    #[error("k = {k} is invalid for {n} points")]
    InvalidK { k: usize, n: usize },
    #[error("point {index} has dimension {actual}, expected {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        actual: usize,
    },
    #[error("no centroids to assign against")]
    NoCentroids,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Cluster(usize),
    Noise,
}

impl Label {
    pub fn cluster(self) -> Option<usize> {
        match self {
            Label::Cluster(c) => Some(c),
            Label::Noise => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Centroid {
    pub vector: Vec<f64>,
    pub member_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    /// One label per input point, in input order.
    pub labels: Vec<Label>,
    pub centroids: Vec<Centroid>,
    /// WCSS after each k-means iteration; a single entry for DBSCAN.
    pub wcss_history: Vec<f64>,
}

impl Clustering {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    pub fn members(&self, cluster: usize) -> impl Iterator<Item = usize> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter(move |(_, l)| **l == Label::Cluster(cluster))
            .map(|(i, _)| i)
    }

    pub fn noise(&self) -> impl Iterator<Item = usize> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == Label::Noise)
            .map(|(i, _)| i)
    }

    pub fn final_wcss(&self) -> f64 {
        self.wcss_history.last().copied().unwrap_or(0.0)
    }
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn check_points<P: AsRef<[f64]>>(points: &[P]) -> Result<usize, ClusterError> {
    let first = points.first().ok_or(ClusterError::EmptyInput)?;
    let dim = first.as_ref().len();
    for (index, p) in points.iter().enumerate() {
        if p.as_ref().len() != dim {
            return Err(ClusterError::DimensionMismatch {
                index,
                expected: dim,
                actual: p.as_ref().len(),
            });
        }
    }
    Ok(dim)
}

/// Mean of the members of each cluster; noise is ignored.
pub(crate) fn centroids_of<P: AsRef<[f64]>>(points: &[P], labels: &[Label], k: usize, dim: usize) -> Vec<Centroid> {
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, l) in points.iter().zip(labels) {
        if let Label::Cluster(c) = *l {
            counts[c] += 1;
            for (s, x) in sums[c].iter_mut().zip(p.as_ref()) {
                *s += x;
            }
        }
    }
    sums.into_iter()
        .zip(counts)
        .map(|(mut v, n)| {
            if n > 0 {
                v.iter_mut().for_each(|x| *x /= n as f64);
            }
            Centroid {
                vector: v,
                member_count: n,
            }
        })
        .collect()
}

/// Arithmetic mean of `points`. Panics on an empty slice.
pub fn mean_centroid<P: AsRef<[f64]>>(points: &[P]) -> Centroid {
    let dim = points[0].as_ref().len();
    let labels = vec![Label::Cluster(0); points.len()];
    centroids_of(points, &labels, 1, dim).remove(0)
}

/// Within-cluster sum of squared Euclidean distances. Noise points are excluded.
pub fn wcss<P: AsRef<[f64]>>(points: &[P], labels: &[Label], centroids: &[Centroid]) -> f64 {
    points
        .iter()
        .zip(labels)
        .filter_map(|(p, l)| l.cluster().map(|c| squared_distance(p.as_ref(), &centroids[c].vector)))
        .sum()
}

/// Index of, and similarity to, the centroid with the highest cosine
/// similarity to `vector`; ties go to the lowest index.
pub fn assign_nearest(vector: &[f64], centroids: &[Centroid]) -> Result<(usize, f64), ClusterError> {
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in centroids.iter().enumerate() {
        if c.vector.len() != vector.len() {
            return Err(ClusterError::DimensionMismatch {
                index: i,
                expected: vector.len(),
                actual: c.vector.len(),
            });
        }
        let s = cosine_unchecked(vector, &c.vector);
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((i, s));
        }
    }
    best.ok_or(ClusterError::NoCentroids)
}
