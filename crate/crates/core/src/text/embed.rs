use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dimension of the bundled hashing embedder.
pub const DEFAULT_DIMENSION: usize = 256;

const NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("embedding dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("embedding service transport error after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("embedding service returned a malformed response: {0}")]
    Malformed(String),
    #[error("embedding memo cache I/O: {0}")]
    Io(#[from] std::io::Error),
}

/// A fixed-length embedding. Either unit-norm or the all-zeros sentinel that
/// stands for "nothing to embed".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    pub fn zeros(dimension: usize) -> Self {
        Self(vec![0.0; dimension])
    }

    /// L2-normalizes `values`. A zero vector stays the zero sentinel.
    pub fn normalized(mut values: Vec<f64>) -> Self {
        let norm = l2_norm(&values);
        if norm > 0.0 {
            values.iter_mut().for_each(|v| *v /= norm);
        } else {
            values.iter_mut().for_each(|v| *v = 0.0);
        }
        Self(values)
    }

    /// Wraps raw values without normalizing. Callers must uphold the norm
    /// invariant themselves; [`EmbeddingVector::is_well_formed`] checks it.
    pub fn from_raw(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|v| *v == 0.0)
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.0)
    }

    pub fn is_well_formed(&self) -> bool {
        self.is_zero() || (self.norm() - 1.0).abs() <= NORM_TOLERANCE
    }
}

impl AsRef<[f64]> for EmbeddingVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

pub(crate) fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cosine similarity of two equal-length vectors, clamped to `[-1, 1]`.
/// Anything compared against a zero vector scores 0.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64, EmbedError> {
    if a.len() != b.len() {
        return Err(EmbedError::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(cosine_unchecked(a, b))
}

pub(crate) fn cosine_unchecked(a: &[f64], b: &[f64]) -> f64 {
    let na = l2_norm(a);
    let nb = l2_norm(b);
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot(a, b) / (na * nb)).clamp(-1.0, 1.0)
}

/// Turns preprocessed text into an [`EmbeddingVector`].
///
/// Implementations must be deterministic within a process: the same text
/// always yields the same vector.
pub trait Embedder: Send + Sync {
    fn name(&self) -> &str;
    fn dimension(&self) -> usize;
    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError>;
}

impl<E: Embedder + ?Sized> Embedder for std::sync::Arc<E> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn dimension(&self) -> usize {
        (**self).dimension()
    }
    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        (**self).embed(text)
    }
}

/// Signed feature hashing over whitespace-separated tokens.
///
/// Each token hashes (FNV-1a, 64 bit) to a bucket and a sign; the bucket
/// values are summed and the result L2-normalized. Empty text maps to the
/// zero sentinel.
#[derive(Debug, Clone)]
pub struct HashingEmbedder {
    dimension: usize,
    name: String,
}

impl HashingEmbedder {
    pub fn new(dimension: usize) -> Self {
        assert!(dimension > 0, "embedding dimension must be positive");
        Self {
            dimension,
            name: format!("hashing-bow-{dimension}"),
        }
    }
}

impl Default for HashingEmbedder {
    fn default() -> Self {
        Self::new(DEFAULT_DIMENSION)
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    bytes
        .iter()
        .fold(OFFSET, |h, b| (h ^ u64::from(*b)).wrapping_mul(PRIME))
}

impl Embedder for HashingEmbedder {
    fn name(&self) -> &str {
        &self.name
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        let mut values = vec![0.0; self.dimension];
        for token in text.split_whitespace() {
            let h = fnv1a(token.as_bytes());
            // low bits pick the bucket, the top bit picks the sign
            let bucket = (h % self.dimension as u64) as usize;
            let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
            values[bucket] += sign;
        }
        Ok(EmbeddingVector::normalized(values))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cosine_hand_values() {
        assert!((cosine_similarity(&[0.6, 0.8], &[1.0, 0.0]).unwrap() - 0.6).abs() < 1e-12);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let v = [0.3, -0.4, 0.5];
        assert!((cosine_similarity(&v, &v).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(cosine_similarity(&[0.0, 0.0], &[1.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn cosine_rejects_dimension_mismatch() {
        assert!(matches!(
            cosine_similarity(&[1.0], &[1.0, 0.0]),
            Err(EmbedError::DimensionMismatch { expected: 1, actual: 2 })
        ));
    }

    #[test]
    fn hashing_embedder_is_deterministic_and_unit_norm() {
        let e = HashingEmbedder::default();
        let a = e.embed("capital france").unwrap();
        let b = e.embed("capital france").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.dimension(), DEFAULT_DIMENSION);
        assert!((a.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_text_is_zero_sentinel() {
        let e = HashingEmbedder::default();
        let z = e.embed("").unwrap();
        assert!(z.is_zero());
        assert!(z.is_well_formed());
        assert_eq!(z.dimension(), DEFAULT_DIMENSION);
    }

    #[test]
    fn word_order_does_not_matter() {
        let e = HashingEmbedder::default();
        assert_eq!(e.embed("alpha beta").unwrap(), e.embed("beta  alpha").unwrap());
    }

    fn unit_vec(dim: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-1.0f64..1.0, dim)
            .prop_filter("non-zero", |v| l2_norm(v) > 1e-6)
            .prop_map(|v| EmbeddingVector::normalized(v).into_inner())
    }

    proptest! {
        #[test]
        fn cosine_symmetric_and_bounded(a in unit_vec(8), b in unit_vec(8)) {
            let ab = cosine_similarity(&a, &b).unwrap();
            let ba = cosine_similarity(&b, &a).unwrap();
            prop_assert_eq!(ab, ba);
            prop_assert!((-1.0..=1.0).contains(&ab));
        }

        #[test]
        fn hashing_output_is_unit_norm(words in proptest::collection::vec("[a-z]{1,8}", 1..20)) {
            let e = HashingEmbedder::new(64);
            let v = e.embed(&words.join(" ")).unwrap();
            prop_assert!(v.is_well_formed());
        }
    }
}
