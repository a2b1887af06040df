//! Sentence-embedding providers and the persistent vector cache.
//!
//! Vectors cross this boundary as 32-bit floats; everything downstream
//! widens them to `f64`.

mod cache;
mod file;
mod mock;
mod remote;

pub use cache::{CacheKey, EmbeddingCache};
pub use file::{
    read_binary_store, read_jsonl_store, write_binary_store, write_jsonl_store, FileProvider,
    StoreEntry, StoreMeta, BINARY_MAGIC,
};
pub use mock::{mock_generate, planted_direction, MockProvider, MockSpec};
pub use remote::{EmbedRequest, EmbedResponse, ErrorResponse, RemoteProvider, DEFAULT_BATCH_SIZE};

use std::collections::HashMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("no texts to embed")]
    EmptyBatch,
    #[error("provider unreachable at {endpoint}: {message}")]
    Unreachable { endpoint: String, message: String },
    #[error("request to {endpoint} timed out")]
    Timeout { endpoint: String },
    #[error("provider returned HTTP {status}: {message}")]
    Remote { status: u16, message: String },
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("text not in store (sha256 {hash})")]
    MissingText { hash: String },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("embedding contains non-finite values")]
    NonFinite,
    #[error("embedding must have at least one dimension")]
    EmptyVector,
    #[error("unknown mock group {0:?}")]
    UnknownGroup(String),
    #[error("invalid mock spec: {0}")]
    InvalidSpec(String),
    #[error("store at {path} belongs to model {found:?}, expected {expected:?}")]
    ModelMismatch {
        path: PathBuf,
        expected: String,
        found: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}, line {line}: {message}")]
    Malformed {
        path: PathBuf,
        line: u64,
        message: String,
    },
}

/// A finite, non-empty embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f32>", into = "Vec<f32>")]
pub struct EmbeddingVector(Vec<f32>);

impl EmbeddingVector {
    pub fn new(values: Vec<f32>) -> Result<Self, EmbedError> {
        if values.is_empty() {
            return Err(EmbedError::EmptyVector);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(EmbedError::NonFinite);
        }
        Ok(Self(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f32] {
        &self.0
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&v| f64::from(v)).collect()
    }

    pub fn bit_eq(&self, other: &Self) -> bool {
        self.0.len() == other.0.len()
            && self
                .0
                .iter()
                .zip(&other.0)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl TryFrom<Vec<f32>> for EmbeddingVector {
    type Error = EmbedError;

    fn try_from(values: Vec<f32>) -> Result<Self, Self::Error> {
        Self::new(values)
    }
}

impl From<EmbeddingVector> for Vec<f32> {
    fn from(v: EmbeddingVector) -> Self {
        v.0
    }
}

/// Hex SHA-256 of the exact text bytes.
pub fn text_sha256(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// How to reach an embedding model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProviderConfig {
    File {
        model_id: String,
        path: PathBuf,
    },
    Remote {
        model_id: String,
        endpoint: String,
        #[serde(default = "default_batch_size")]
        batch_size: usize,
        #[serde(default = "default_timeout_secs")]
        timeout_secs: u64,
    },
    Mock {
        model_id: String,
        spec: MockSpec,
    },
}

fn default_batch_size() -> usize {
    DEFAULT_BATCH_SIZE
}

fn default_timeout_secs() -> u64 {
    60
}

impl ProviderConfig {
    pub fn model_id(&self) -> &str {
        match self {
            ProviderConfig::File { model_id, .. }
            | ProviderConfig::Remote { model_id, .. }
            | ProviderConfig::Mock { model_id, .. } => model_id,
        }
    }
}

/// Anything that turns texts into vectors.
pub trait EmbeddingProvider: Send + Sync {
    fn model_id(&self) -> &str;

    /// Declared dimensionality, when known up front.
    fn dim(&self) -> Option<usize>;

    /// Embeds a batch; the result is aligned with `texts`.
    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError>;
}

/// Builds a provider from its configuration. `text_groups` feeds the mock
/// provider's planted structure and is ignored by the other kinds.
pub fn build_provider(
    config: &ProviderConfig,
    text_groups: HashMap<String, String>,
) -> Result<Box<dyn EmbeddingProvider>, EmbedError> {
    Ok(match config {
        ProviderConfig::File { model_id, path } => Box::new(FileProvider::open(model_id, path)?),
        ProviderConfig::Remote {
            model_id,
            endpoint,
            batch_size,
            timeout_secs,
        } => Box::new(RemoteProvider::new(
            model_id,
            endpoint,
            *batch_size,
            std::time::Duration::from_secs(*timeout_secs),
        )?),
        ProviderConfig::Mock { model_id, spec } => {
            Box::new(MockProvider::new(model_id, spec.clone())?.with_groups(text_groups))
        }
    })
}

/// Embeds `texts` in order, consulting and filling `cache`.
///
/// Duplicate texts are sent to the provider once. Cache hits never reach the
/// provider. All returned vectors share one dimension.
pub fn embed_texts(
    texts: &[String],
    provider: &dyn EmbeddingProvider,
    cache: Option<&EmbeddingCache>,
) -> Result<Vec<EmbeddingVector>, EmbedError> {
    if texts.is_empty() {
        return Err(EmbedError::EmptyBatch);
    }
    let model_id = provider.model_id();

    let mut unique: Vec<&String> = Vec::new();
    let mut slot_of: HashMap<&str, usize> = HashMap::new();
    for t in texts {
        slot_of.entry(t.as_str()).or_insert_with(|| {
            unique.push(t);
            unique.len() - 1
        });
    }

    let mut resolved: Vec<Option<EmbeddingVector>> = vec![None; unique.len()];
    let mut misses: Vec<usize> = Vec::new();
    for (i, t) in unique.iter().enumerate() {
        let hit = match cache {
            Some(c) => c.get(&CacheKey::new(model_id, t))?,
            None => None,
        };
        match hit {
            Some(v) => resolved[i] = Some(v),
            None => misses.push(i),
        }
    }

    if !misses.is_empty() {
        let batch: Vec<String> = misses.iter().map(|&i| unique[i].clone()).collect();
        let vectors = provider.embed_batch(&batch)?;
        if vectors.len() != batch.len() {
            return Err(EmbedError::Protocol(format!(
                "provider returned {} vectors for {} texts",
                vectors.len(),
                batch.len()
            )));
        }
        for (&i, v) in misses.iter().zip(vectors) {
            if let Some(c) = cache {
                c.put(CacheKey::new(model_id, unique[i]), v.clone())?;
            }
            resolved[i] = Some(v);
        }
    }

    let expected = provider
        .dim()
        .unwrap_or_else(|| resolved[0].as_ref().map(EmbeddingVector::dim).unwrap_or(0));
    for v in resolved.iter().flatten() {
        if v.dim() != expected {
            return Err(EmbedError::DimensionMismatch {
                expected,
                found: v.dim(),
            });
        }
    }

    Ok(texts
        .iter()
        .map(|t| {
            resolved[slot_of[t.as_str()]]
                .clone()
                .expect("every slot resolved")
        })
        .collect())
}
