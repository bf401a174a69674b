//! Language-model and embedding calls behind a record/replay cache.
//!
//! Every request is addressed by the SHA-256 digest of
//! `(model id, prompt template id, rendered prompt)`. The cache directory
//! holds one file per digest, named by its hex form, containing the raw
//! response bytes. In [`Mode::Replay`] no backend is consulted and a missing
//! digest is an error; in [`Mode::Live`] cache hits are served as-is and
//! misses are fetched from the backend and written through.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::{Arc, Mutex, RwLock};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Request {
    pub model: String,
    pub template_id: String,
    pub prompt: String,
}

impl Request {
    pub fn new(model: impl Into<String>, template_id: impl Into<String>, prompt: impl Into<String>) -> Self {
        Self {
            model: model.into(),
            template_id: template_id.into(),
            prompt: prompt.into(),
        }
    }

    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for part in [&self.model, &self.template_id, &self.prompt] {
            h.update((part.len() as u64).to_le_bytes());
            h.update(part.as_bytes());
        }
        hex::encode(h.finalize())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ProviderError {
    #[error("replay miss: no cached response for digest {digest}")]
    ReplayMiss { digest: String },
    #[error("no live backend configured")]
    NoBackend,
    #[error("backend error: {message}")]
    Backend { message: String, transient: bool },
    #[error("cache I/O at {path}: {source}")]
    Cache {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed embedding response: {0}")]
    BadEmbedding(String),
}

impl ProviderError {
    pub fn transient(message: impl Into<String>) -> Self {
        ProviderError::Backend {
            message: message.into(),
            transient: true,
        }
    }

    pub fn permanent(message: impl Into<String>) -> Self {
        ProviderError::Backend {
            message: message.into(),
            transient: false,
        }
    }

    fn is_retryable(&self) -> bool {
        matches!(self, ProviderError::Backend { transient: true, .. })
    }
}

/// Something that can answer a request with raw response bytes.
pub trait Backend: Send + Sync {
    fn call(&self, request: &Request) -> Result<Vec<u8>, ProviderError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Replay,
    Live,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "replay" => Ok(Mode::Replay),
            "live" => Ok(Mode::Live),
            other => Err(format!("unknown mode `{other}` (expected replay|live)")),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Replay => "replay",
            Mode::Live => "live",
        })
    }
}

/// Content-addressed response store. Reads are concurrent; writes are
/// serialized and land via rename so readers never see partial files.
#[derive(Debug, Default)]
pub struct ReplayCache {
    dir: Option<PathBuf>,
    entries: RwLock<HashMap<String, Arc<Vec<u8>>>>,
    write_lock: Mutex<()>,
}

impl ReplayCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn open(dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: Some(dir.into()),
            ..Self::default()
        }
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn get(&self, digest: &str) -> Result<Option<Arc<Vec<u8>>>, ProviderError> {
        if let Some(hit) = self.entries.read().expect("cache lock").get(digest) {
            return Ok(Some(hit.clone()));
        }
        let Some(dir) = &self.dir else {
            return Ok(None);
        };
        let path = dir.join(digest);
        match std::fs::read(&path) {
            Ok(bytes) => {
                let bytes = Arc::new(bytes);
                self.entries
                    .write()
                    .expect("cache lock")
                    .insert(digest.to_string(), bytes.clone());
                Ok(Some(bytes))
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(source) => Err(ProviderError::Cache { path, source }),
        }
    }

    pub fn insert(&self, digest: &str, bytes: Vec<u8>) -> Result<(), ProviderError> {
        let _guard = self.write_lock.lock().expect("cache write lock");
        if let Some(dir) = &self.dir {
            let io = |path: &Path| {
                let path = path.to_path_buf();
                move |source| ProviderError::Cache { path, source }
            };
            std::fs::create_dir_all(dir).map_err(io(dir))?;
            let tmp = dir.join(format!(".{digest}.tmp"));
            std::fs::write(&tmp, &bytes).map_err(io(&tmp))?;
            let dest = dir.join(digest);
            std::fs::rename(&tmp, &dest).map_err(io(&dest))?;
        }
        self.entries
            .write()
            .expect("cache lock")
            .insert(digest.to_string(), Arc::new(bytes));
        Ok(())
    }

    pub fn len(&self) -> usize {
        match &self.dir {
            Some(dir) => std::fs::read_dir(dir)
                .map(|rd| {
                    rd.filter_map(Result::ok)
                        .filter(|e| !e.file_name().to_string_lossy().starts_with('.'))
                        .count()
                })
                .unwrap_or(0),
            None => self.entries.read().expect("cache lock").len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            attempts: 3,
            base_delay_ms: 500,
        }
    }
}

impl RetryPolicy {
    pub fn no_delay() -> Self {
        Self {
            base_delay_ms: 0,
            ..Self::default()
        }
    }
}

/// A cache plus an optional live backend, shared by every pipeline stage.
#[derive(Clone)]
pub struct Provider {
    mode: Mode,
    cache: Arc<ReplayCache>,
    backend: Option<Arc<dyn Backend>>,
    retry: RetryPolicy,
}

impl fmt::Debug for Provider {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Provider")
            .field("mode", &self.mode)
            .field("cache", &self.cache.dir())
            .field("backend", &self.backend.is_some())
            .finish()
    }
}

impl Provider {
    pub fn replay(cache: Arc<ReplayCache>) -> Self {
        Self {
            mode: Mode::Replay,
            cache,
            backend: None,
            retry: RetryPolicy::default(),
        }
    }

    pub fn live(cache: Arc<ReplayCache>, backend: Arc<dyn Backend>) -> Self {
        Self {
            mode: Mode::Live,
            cache,
            backend: Some(backend),
            retry: RetryPolicy::default(),
        }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn cache(&self) -> &Arc<ReplayCache> {
        &self.cache
    }

    /// Serves `request` from the cache, or (live mode only) from the backend
    /// with write-through.
    pub fn cache_roundtrip(&self, request: &Request) -> Result<Arc<Vec<u8>>, ProviderError> {
        let digest = request.digest();
        if let Some(hit) = self.cache.get(&digest)? {
            return Ok(hit);
        }
        if self.mode == Mode::Replay {
            return Err(ProviderError::ReplayMiss { digest });
        }
        let backend = self.backend.as_ref().ok_or(ProviderError::NoBackend)?;
        let bytes = self.call_with_retry(backend.as_ref(), request)?;
        self.cache.insert(&digest, bytes.clone())?;
        Ok(Arc::new(bytes))
    }

    pub fn complete(&self, request: &Request) -> Result<String, ProviderError> {
        let bytes = self.cache_roundtrip(request)?;
        Ok(String::from_utf8_lossy(&bytes).into_owned())
    }

    /// Embeds `text`; the response is a JSON array of finite numbers.
    pub fn embed(&self, model: &str, text: &str) -> Result<Vec<f32>, ProviderError> {
        let bytes = self.cache_roundtrip(&Request::new(model, EMBEDDING_TEMPLATE_ID, text))?;
        let values: Vec<f64> = serde_json::from_slice(&bytes)
            .map_err(|e| ProviderError::BadEmbedding(e.to_string()))?;
        if values.is_empty() {
            return Err(ProviderError::BadEmbedding("empty vector".into()));
        }
        values
            .into_iter()
            .map(|v| {
                let f = v as f32;
                f.is_finite()
                    .then_some(f)
                    .ok_or_else(|| ProviderError::BadEmbedding("non-finite entry".into()))
            })
            .collect()
    }

    fn call_with_retry(&self, backend: &dyn Backend, request: &Request) -> Result<Vec<u8>, ProviderError> {
        let attempts = self.retry.attempts.max(1);
        let mut attempt = 0;
        loop {
            attempt += 1;
            match backend.call(request) {
                Ok(bytes) => return Ok(bytes),
                Err(e) if e.is_retryable() && attempt < attempts => {
                    let delay = self.retry.base_delay_ms.saturating_mul(1 << (attempt - 1));
                    log::warn!("provider attempt {attempt}/{attempts} failed: {e}; retrying in {delay}ms");
                    if delay > 0 {
                        std::thread::sleep(Duration::from_millis(delay));
                    }
                }
                Err(e) => return Err(e),
            }
        }
    }
}

pub const EMBEDDING_TEMPLATE_ID: &str = "embedding";

/// Answers from a lookup function; `None` becomes a permanent backend error.
/// Used to record fixtures and in tests.
pub struct ScriptedBackend<F>(pub F);

impl<F> Backend for ScriptedBackend<F>
where
    F: Fn(&Request) -> Option<String> + Send + Sync,
{
    fn call(&self, request: &Request) -> Result<Vec<u8>, ProviderError> {
        (self.0)(request)
            .map(String::into_bytes)
            .ok_or_else(|| ProviderError::permanent(format!("no scripted response for {}", request.template_id)))
    }
}

/// Local deterministic embedder: signed feature hashing of character
/// trigrams, L2-normalized. Separators and underscores are dropped first so
/// that `gpt_4` and `gpt4` embed identically.
#[derive(Debug, Clone, Copy)]
pub struct HashingEmbedder {
    pub dim: usize,
}

impl HashingEmbedder {
    pub fn embed_text(&self, text: &str) -> Vec<f32> {
        let cleaned: Vec<char> = text
            .to_lowercase()
            .chars()
            .filter(|c| c.is_alphanumeric() || *c == ':' || *c == '>' || *c == '#')
            .collect();
        let padded: Vec<char> = std::iter::once('^')
            .chain(cleaned)
            .chain(std::iter::once('$'))
            .collect();
        let mut v = vec![0f64; self.dim.max(1)];
        for gram in padded.windows(3) {
            let s: String = gram.iter().collect();
            let h = Sha256::digest(s.as_bytes());
            let idx = u64::from_le_bytes(h[..8].try_into().expect("8 bytes")) as usize % v.len();
            let sign = if h[8] & 1 == 0 { 1.0 } else { -1.0 };
            v[idx] += sign;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter()
            .map(|x| if norm > 0.0 { (x / norm) as f32 } else { 0.0 })
            .collect()
    }
}

impl Backend for HashingEmbedder {
    fn call(&self, request: &Request) -> Result<Vec<u8>, ProviderError> {
        if request.template_id != EMBEDDING_TEMPLATE_ID {
            return Err(ProviderError::permanent("hashing embedder only serves embeddings"));
        }
        let v = self.embed_text(&request.prompt);
        Ok(serde_json::to_vec(&v).expect("float vector serializes"))
    }
}

/// Routes embedding requests to one backend and everything else to another.
pub struct SplitBackend {
    pub completions: Arc<dyn Backend>,
    pub embeddings: Arc<dyn Backend>,
}

impl Backend for SplitBackend {
    fn call(&self, request: &Request) -> Result<Vec<u8>, ProviderError> {
        if request.template_id == EMBEDDING_TEMPLATE_ID {
            self.embeddings.call(request)
        } else {
            self.completions.call(request)
        }
    }
}

#[cfg(feature = "live")]
pub mod http {
    //! HTTP backends: an Anthropic-style messages endpoint for completions and
    //! an OpenAI-style `/embeddings` endpoint for vectors.

    use super::{Backend, ProviderError, Request, EMBEDDING_TEMPLATE_ID};
    use serde_json::{json, Value};

    pub struct HttpBackend {
        client: reqwest::blocking::Client,
        pub messages_url: String,
        pub embeddings_url: String,
        api_key: String,
        pub max_tokens: u32,
    }

    impl HttpBackend {
        pub fn new(messages_url: String, embeddings_url: String, api_key: String) -> Self {
            Self {
                client: reqwest::blocking::Client::new(),
                messages_url,
                embeddings_url,
                api_key,
                max_tokens: 2048,
            }
        }

        fn post(&self, url: &str, body: Value) -> Result<Value, ProviderError> {
            let resp = self
                .client
                .post(url)
                .header("x-api-key", &self.api_key)
                .header("anthropic-version", "2023-06-01")
                .bearer_auth(&self.api_key)
                .json(&body)
                .send()
                .map_err(|e| ProviderError::transient(e.to_string()))?;
            let status = resp.status();
            if status.is_server_error() || status.as_u16() == 429 {
                return Err(ProviderError::transient(format!("HTTP {status}")));
            }
            if !status.is_success() {
                return Err(ProviderError::permanent(format!("HTTP {status}")));
            }
            resp.json().map_err(|e| ProviderError::transient(e.to_string()))
        }
    }

    impl Backend for HttpBackend {
        fn call(&self, request: &Request) -> Result<Vec<u8>, ProviderError> {
            if request.template_id == EMBEDDING_TEMPLATE_ID {
                let v = self.post(
                    &self.embeddings_url,
                    json!({"model": request.model, "input": request.prompt}),
                )?;
                let emb = v
                    .pointer("/data/0/embedding")
                    .ok_or_else(|| ProviderError::permanent("no embedding in response"))?;
                return Ok(serde_json::to_vec(emb).expect("json value serializes"));
            }
            let v = self.post(
                &self.messages_url,
                json!({
                    "model": request.model,
                    "max_tokens": self.max_tokens,
                    "messages": [{"role": "user", "content": request.prompt}],
                }),
            )?;
            let text: String = v
                .get("content")
                .and_then(Value::as_array)
                .map(|blocks| {
                    blocks
                        .iter()
                        .filter_map(|b| b.get("text").and_then(Value::as_str))
                        .collect()
                })
                .ok_or_else(|| ProviderError::permanent("no text content in response"))?;
            Ok(text.into_bytes())
        }
    }
}
