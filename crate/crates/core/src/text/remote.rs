//! HTTP client for an external embedding service.
//!
//! Wire format: `POST <url>` with `{"model": ..., "input": ...}`, response
//! `{"embedding": [f64, ...]}`. The API key, when present, is read from
//! `SEMCACHE_EMBED_KEY` and sent as a bearer token. Responses are memoized in
//! memory and, optionally, on disk under `<memo_dir>/<model>/<sha256(text)>.json`
//! so repeated runs see identical vectors.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::embed::{EmbedError, Embedder, EmbeddingVector};

pub const API_KEY_ENV: &str = "SEMCACHE_EMBED_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemoteEmbedderConfig {
    pub url: String,
    pub model: String,
    pub dimension: usize,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default = "default_backoff_ms")]
    pub initial_backoff_ms: u64,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    #[serde(default)]
    pub memo_dir: Option<PathBuf>,
}

fn default_max_retries() -> u32 {
    3
}
fn default_backoff_ms() -> u64 {
    250
}
fn default_timeout_ms() -> u64 {
    30_000
}

impl RemoteEmbedderConfig {
    pub fn new(url: impl Into<String>, model: impl Into<String>, dimension: usize) -> Self {
        Self {
            url: url.into(),
            model: model.into(),
            dimension,
            max_retries: default_max_retries(),
            initial_backoff_ms: default_backoff_ms(),
            timeout_ms: default_timeout_ms(),
            memo_dir: None,
        }
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    model: &'a str,
    input: &'a str,
}

#[derive(Deserialize)]
struct EmbedResponse {
    embedding: Vec<f64>,
}

enum Attempt {
    Retryable(String),
    Fatal(EmbedError),
}

pub struct RemoteEmbedder {
    config: RemoteEmbedderConfig,
    api_key: Option<String>,
    agent: ureq::Agent,
    memo: Mutex<HashMap<String, EmbeddingVector>>,
}

impl std::fmt::Debug for RemoteEmbedder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteEmbedder")
            .field("config", &self.config)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .finish()
    }
}

impl RemoteEmbedder {
    /// Builds a client, picking up the API key from the environment.
    pub fn new(config: RemoteEmbedderConfig) -> Self {
        let key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        Self::with_api_key(config, key)
    }

    pub fn with_api_key(config: RemoteEmbedderConfig, api_key: Option<String>) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(config.timeout_ms)))
            .build()
            .into();
        Self {
            config,
            api_key,
            agent,
            memo: Mutex::new(HashMap::new()),
        }
    }

    pub fn config(&self) -> &RemoteEmbedderConfig {
        &self.config
    }

    fn text_key(text: &str) -> String {
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    fn memo_path(&self, dir: &Path, key: &str) -> PathBuf {
        let model: String = self
            .config
            .model
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
            .collect();
        dir.join(model).join(format!("{key}.json"))
    }

    fn read_disk(&self, key: &str) -> Result<Option<EmbeddingVector>, EmbedError> {
        let Some(dir) = &self.config.memo_dir else {
            return Ok(None);
        };
        let path = self.memo_path(dir, key);
        match std::fs::read(&path) {
            Ok(bytes) => {
                let values: Vec<f64> = serde_json::from_slice(&bytes)
                    .map_err(|e| EmbedError::Malformed(format!("{}: {e}", path.display())))?;
                Ok(Some(self.finish(values)?))
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    fn write_disk(&self, key: &str, v: &EmbeddingVector) -> Result<(), EmbedError> {
        let Some(dir) = &self.config.memo_dir else {
            return Ok(());
        };
        let path = self.memo_path(dir, key);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let body = serde_json::to_vec(v.as_slice()).expect("float vectors serialize");
        std::fs::write(path, body)?;
        Ok(())
    }

    fn finish(&self, values: Vec<f64>) -> Result<EmbeddingVector, EmbedError> {
        if values.len() != self.config.dimension {
            return Err(EmbedError::DimensionMismatch {
                expected: self.config.dimension,
                actual: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(EmbedError::Malformed("non-finite embedding component".into()));
        }
        Ok(EmbeddingVector::normalized(values))
    }

    fn attempt(&self, text: &str) -> Result<Vec<f64>, Attempt> {
        let mut req = self.agent.post(&self.config.url);
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let body = EmbedRequest {
            model: &self.config.model,
            input: text,
        };
        match req.send_json(&body) {
            Ok(resp) => resp
                .into_body()
                .read_json::<EmbedResponse>()
                .map(|r| r.embedding)
                .map_err(|e| Attempt::Fatal(EmbedError::Malformed(e.to_string()))),
            Err(ureq::Error::StatusCode(code)) if code == 429 || code >= 500 => {
                Err(Attempt::Retryable(format!("http status {code}")))
            }
            Err(ureq::Error::StatusCode(code)) => Err(Attempt::Fatal(EmbedError::Transport {
                attempts: 1,
                message: format!("http status {code}"),
            })),
            Err(e) => Err(Attempt::Retryable(e.to_string())),
        }
    }

    fn fetch(&self, text: &str) -> Result<Vec<f64>, EmbedError> {
        let mut backoff = Duration::from_millis(self.config.initial_backoff_ms);
        let mut attempts = 0;
        loop {
            attempts += 1;
            match self.attempt(text) {
                Ok(values) => return Ok(values),
                Err(Attempt::Fatal(EmbedError::Transport { message, .. })) => {
                    return Err(EmbedError::Transport { attempts, message })
                }
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retryable(message)) => {
                    if attempts > self.config.max_retries {
                        return Err(EmbedError::Transport { attempts, message });
                    }
                    std::thread::sleep(backoff);
                    backoff *= 2;
                }
            }
        }
    }
}

impl Embedder for RemoteEmbedder {
    fn name(&self) -> &str {
        &self.config.model
    }

    fn dimension(&self) -> usize {
        self.config.dimension
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        if text.trim().is_empty() {
            return Ok(EmbeddingVector::zeros(self.config.dimension));
        }
        let key = Self::text_key(text);
        // Holding the lock across the fetch keeps a single writer per process;
        // concurrent callers queue instead of issuing duplicate requests.
        let mut memo = self.memo.lock().unwrap_or_else(|p| p.into_inner());
        if let Some(v) = memo.get(&key) {
            return Ok(v.clone());
        }
        let v = match self.read_disk(&key)? {
            Some(v) => v,
            None => {
                let v = self.finish(self.fetch(text)?)?;
                self.write_disk(&key, &v)?;
                v
            }
        };
        memo.insert(key, v.clone());
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    struct MockServer {
        url: String,
        hits: Arc<AtomicUsize>,
        bodies: Arc<Mutex<Vec<(String, Option<String>)>>>,
    }

    /// Serves `responses` in order (status, body); the last one repeats.
    fn serve(responses: Vec<(u16, String)>) -> MockServer {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/embed", listener.local_addr().unwrap());
        let hits = Arc::new(AtomicUsize::new(0));
        let bodies = Arc::new(Mutex::new(Vec::new()));
        let (h, b) = (hits.clone(), bodies.clone());
        std::thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(mut stream) = stream else { break };
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut len = 0usize;
                let mut auth = None;
                loop {
                    let mut line = String::new();
                    if reader.read_line(&mut line).unwrap_or(0) == 0 {
                        break;
                    }
                    let line = line.trim_end();
                    if line.is_empty() {
                        break;
                    }
                    let lower = line.to_ascii_lowercase();
                    if let Some(v) = lower.strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                    if lower.starts_with("authorization:") {
                        auth = Some(line["authorization:".len()..].trim().to_string());
                    }
                }
                let mut body = vec![0u8; len];
                reader.read_exact(&mut body).unwrap();
                let n = h.fetch_add(1, Ordering::SeqCst);
                b.lock().unwrap().push((String::from_utf8(body).unwrap(), auth));
                let (status, payload) = responses[n.min(responses.len() - 1)].clone();
                let resp = format!(
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
                    payload.len()
                );
                let _ = stream.write_all(resp.as_bytes());
            }
        });
        MockServer { url, hits, bodies }
    }

    fn config(url: &str) -> RemoteEmbedderConfig {
        RemoteEmbedderConfig {
            initial_backoff_ms: 1,
            timeout_ms: 5_000,
            ..RemoteEmbedderConfig::new(url, "test-model", 3)
        }
    }

    #[test]
    fn posts_model_and_input_and_normalizes() {
        let server = serve(vec![(200, r#"{"embedding":[3.0,4.0,0.0]}"#.into())]);
        let e = RemoteEmbedder::with_api_key(config(&server.url), Some("k123".into()));
        let v = e.embed("capital france").unwrap();
        assert_eq!(v.as_slice(), &[0.6, 0.8, 0.0]);
        let bodies = server.bodies.lock().unwrap();
        let sent: serde_json::Value = serde_json::from_str(&bodies[0].0).unwrap();
        assert_eq!(sent, serde_json::json!({"model": "test-model", "input": "capital france"}));
        assert_eq!(bodies[0].1.as_deref(), Some("Bearer k123"));
    }

    #[test]
    fn memoizes_in_memory() {
        let server = serve(vec![(200, r#"{"embedding":[1.0,0.0,0.0]}"#.into())]);
        let e = RemoteEmbedder::with_api_key(config(&server.url), None);
        let a = e.embed("same text").unwrap();
        let b = e.embed("same text").unwrap();
        assert_eq!(a, b);
        assert_eq!(server.hits.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn retries_server_errors_then_succeeds() {
        let server = serve(vec![
            (500, "{}".into()),
            (503, "{}".into()),
            (200, r#"{"embedding":[0.0,0.0,2.0]}"#.into()),
        ]);
        let e = RemoteEmbedder::with_api_key(config(&server.url), None);
        let v = e.embed("q").unwrap();
        assert_eq!(v.as_slice(), &[0.0, 0.0, 1.0]);
        assert_eq!(server.hits.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn gives_up_after_three_retries() {
        let server = serve(vec![(500, "{}".into())]);
        let e = RemoteEmbedder::with_api_key(config(&server.url), None);
        match e.embed("q") {
            Err(EmbedError::Transport { attempts, .. }) => assert_eq!(attempts, 4),
            other => panic!("expected transport error, got {other:?}"),
        }
        assert_eq!(server.hits.load(Ordering::SeqCst), 4);
    }

    #[test]
    fn client_errors_are_not_retried() {
        let server = serve(vec![(401, "{}".into())]);
        let e = RemoteEmbedder::with_api_key(config(&server.url), None);
        assert!(matches!(e.embed("q"), Err(EmbedError::Transport { attempts: 1, .. })));
        assert_eq!(server.hits.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn wrong_dimension_is_rejected() {
        let server = serve(vec![(200, r#"{"embedding":[1.0,0.0]}"#.into())]);
        let e = RemoteEmbedder::with_api_key(config(&server.url), None);
        assert!(matches!(
            e.embed("q"),
            Err(EmbedError::DimensionMismatch { expected: 3, actual: 2 })
        ));
    }

    #[test]
    fn disk_memo_survives_new_client() {
        let dir = tempfile::tempdir().unwrap();
        let server = serve(vec![(200, r#"{"embedding":[0.0,1.0,0.0]}"#.into())]);
        let mut cfg = config(&server.url);
        cfg.memo_dir = Some(dir.path().to_path_buf());
        let first = RemoteEmbedder::with_api_key(cfg.clone(), None).embed("hello").unwrap();
        let second = RemoteEmbedder::with_api_key(cfg, None).embed("hello").unwrap();
        assert_eq!(first, second);
        assert_eq!(server.hits.load(Ordering::SeqCst), 1);
        let key = RemoteEmbedder::text_key("hello");
        assert!(dir.path().join("test-model").join(format!("{key}.json")).exists());
    }

    #[test]
    fn empty_text_skips_the_network() {
        let e = RemoteEmbedder::with_api_key(config("http://127.0.0.1:9/unused"), None);
        assert!(e.embed("").unwrap().is_zero());
    }
}
