//! Tokenization, query preprocessing and embedding.

pub mod embed;
pub mod preprocess;
pub mod remote;
pub mod tokenize;

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

pub use embed::{cosine_similarity, EmbedError, Embedder, EmbeddingVector, HashingEmbedder};
pub use preprocess::{preprocess, StopWords};
pub use remote::{RemoteEmbedder, RemoteEmbedderConfig};
pub use tokenize::count_tokens;

/// Embeds `text` with `embedder`. The caller is expected to have preprocessed it.
pub fn embed(embedder: &dyn Embedder, text: &str) -> Result<EmbeddingVector, EmbedError> {
    embedder.embed(text)
}

/// Anything that maps a raw query to its cache key embedding.
pub trait QueryEncoder: Send + Sync {
    fn embedder_name(&self) -> &str;
    fn dimension(&self) -> usize;
    fn encode(&self, query: &str) -> Result<EmbeddingVector, EmbedError>;
}

/// Stop-word preprocessing followed by an [`Embedder`].
#[derive(Clone)]
pub struct TextPipeline {
    stopwords: StopWords,
    embedder: Arc<dyn Embedder>,
}

impl TextPipeline {
    pub fn new(stopwords: StopWords, embedder: Arc<dyn Embedder>) -> Self {
        Self { stopwords, embedder }
    }

    /// English stop words and the 256-dimensional hashing embedder.
    pub fn local() -> Self {
        Self::new(StopWords::english(), Arc::new(HashingEmbedder::default()))
    }

    pub fn stopwords(&self) -> &StopWords {
        &self.stopwords
    }

    pub fn embedder(&self) -> &dyn Embedder {
        self.embedder.as_ref()
    }
}

impl std::fmt::Debug for TextPipeline {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TextPipeline")
            .field("stopwords", &self.stopwords.len())
            .field("embedder", &self.embedder.name())
            .finish()
    }
}

impl QueryEncoder for TextPipeline {
    fn embedder_name(&self) -> &str {
        self.embedder.name()
    }

    fn dimension(&self) -> usize {
        self.embedder.dimension()
    }

    fn encode(&self, query: &str) -> Result<EmbeddingVector, EmbedError> {
        self.embedder.embed(&preprocess(query, &self.stopwords))
    }
}

/// Memoizes another encoder by raw query text, failures included, so a
/// replay sees one consistent answer per distinct query.
pub struct MemoEncoder<'a> {
    inner: &'a dyn QueryEncoder,
    memo: Mutex<HashMap<String, Result<EmbeddingVector, String>>>,
}

impl<'a> MemoEncoder<'a> {
    pub fn new(inner: &'a dyn QueryEncoder) -> Self {
        Self {
            inner,
            memo: Mutex::new(HashMap::new()),
        }
    }

    pub fn len(&self) -> usize {
        self.memo.lock().unwrap_or_else(|p| p.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl QueryEncoder for MemoEncoder<'_> {
    fn embedder_name(&self) -> &str {
        self.inner.embedder_name()
    }

    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    fn encode(&self, query: &str) -> Result<EmbeddingVector, EmbedError> {
        if let Some(hit) = self.memo.lock().unwrap_or_else(|p| p.into_inner()).get(query) {
            return hit.clone().map_err(|message| EmbedError::Transport { attempts: 0, message });
        }
        let result = self.inner.encode(query);
        let stored = match &result {
            Ok(v) => Ok(v.clone()),
            Err(e) => Err(e.to_string()),
        };
        self.memo
            .lock()
            .unwrap_or_else(|p| p.into_inner())
            .insert(query.to_string(), stored);
        result
    }
}
