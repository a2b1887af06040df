//! Client for an HTTP embedding service speaking the `/embed` JSON protocol.

use std::sync::OnceLock;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{EmbedError, EmbeddingProvider, EmbeddingVector};

pub const DEFAULT_BATCH_SIZE: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedRequest {
    pub model: String,
    pub texts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedResponse {
    pub model: String,
    pub dim: usize,
    pub vectors: Vec<Vec<f32>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorResponse {
    pub error: String,
}

pub struct RemoteProvider {
    model_id: String,
    endpoint: String,
    batch_size: usize,
    client: reqwest::blocking::Client,
    dim: OnceLock<usize>,
}

impl RemoteProvider {
    /// `endpoint` is the service base URL; requests go to `{endpoint}/embed`.
    pub fn new(
        model_id: &str,
        endpoint: &str,
        batch_size: usize,
        timeout: Duration,
    ) -> Result<Self, EmbedError> {
        if batch_size == 0 {
            return Err(EmbedError::InvalidSpec(
                "batch_size must be at least 1".into(),
            ));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| EmbedError::Unreachable {
                endpoint: endpoint.to_string(),
                message: e.to_string(),
            })?;
        Ok(Self {
            model_id: model_id.to_string(),
            endpoint: endpoint.trim_end_matches('/').to_string(),
            batch_size,
            client,
            dim: OnceLock::new(),
        })
    }

    fn url(&self) -> String {
        format!("{}/embed", self.endpoint)
    }

    fn post(&self, texts: &[String]) -> Result<EmbedResponse, EmbedError> {
        let body = EmbedRequest {
            model: self.model_id.clone(),
            texts: texts.to_vec(),
        };
        let send = || self.client.post(self.url()).json(&body).send();
        let response = match send() {
            Err(e) if e.is_timeout() => send(),
            other => other,
        }
        .map_err(|e| self.transport_error(e))?;

        let status = response.status();
        let bytes = response.bytes().map_err(|e| self.transport_error(e))?;
        if !status.is_success() {
            let message = serde_json::from_slice::<ErrorResponse>(&bytes)
                .map(|e| e.error)
                .unwrap_or_else(|_| String::from_utf8_lossy(&bytes).into_owned());
            return Err(EmbedError::Remote {
                status: status.as_u16(),
                message,
            });
        }
        serde_json::from_slice(&bytes)
            .map_err(|e| EmbedError::Protocol(format!("bad response body: {e}")))
    }

    fn transport_error(&self, e: reqwest::Error) -> EmbedError {
        if e.is_timeout() {
            EmbedError::Timeout {
                endpoint: self.url(),
            }
        } else {
            EmbedError::Unreachable {
                endpoint: self.url(),
                message: e.to_string(),
            }
        }
    }

    fn check(&self, sent: usize, r: EmbedResponse) -> Result<Vec<EmbeddingVector>, EmbedError> {
        if r.model != self.model_id {
            return Err(EmbedError::Protocol(format!(
                "response model {:?} does not match request {:?}",
                r.model, self.model_id
            )));
        }
        if r.vectors.len() != sent {
            return Err(EmbedError::Protocol(format!(
                "{} vectors returned for {} texts",
                r.vectors.len(),
                sent
            )));
        }
        let dim = *self.dim.get_or_init(|| r.dim);
        if r.dim != dim {
            return Err(EmbedError::DimensionMismatch {
                expected: dim,
                found: r.dim,
            });
        }
        r.vectors
            .into_iter()
            .map(|v| {
                if v.len() != dim {
                    return Err(EmbedError::DimensionMismatch {
                        expected: dim,
                        found: v.len(),
                    });
                }
                EmbeddingVector::new(v)
            })
            .collect()
    }
}

impl EmbeddingProvider for RemoteProvider {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn dim(&self) -> Option<usize> {
        self.dim.get().copied()
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        if texts.is_empty() {
            return Err(EmbedError::EmptyBatch);
        }
        let mut out = Vec::with_capacity(texts.len());
        for chunk in texts.chunks(self.batch_size) {
            let response = self.post(chunk)?;
            out.extend(self.check(chunk.len(), response)?);
        }
        Ok(out)
    }
}
