//! Deterministic synthetic embeddings with a planted direction.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicUsize, Ordering};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{EmbedError, EmbeddingProvider, EmbeddingVector};

/// Planted structure: `vector = noise * z(seed, text) + offset(group) * u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockSpec {
    pub seed: u64,
    pub dim: usize,
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub offsets: BTreeMap<String, f64>,
    /// Plant along a basis axis instead of a seeded random direction.
    #[serde(default)]
    pub axis: Option<usize>,
}

impl MockSpec {
    pub fn validate(&self) -> Result<(), EmbedError> {
        if self.dim == 0 {
            return Err(EmbedError::InvalidSpec("dim must be at least 1".into()));
        }
        if !self.noise.is_finite() || self.noise < 0.0 {
            return Err(EmbedError::InvalidSpec(format!(
                "noise must be finite and >= 0, got {}",
                self.noise
            )));
        }
        if let Some((g, o)) = self.offsets.iter().find(|(_, o)| !o.is_finite()) {
            return Err(EmbedError::InvalidSpec(format!(
                "offset for {g:?} is not finite: {o}"
            )));
        }
        if let Some(a) = self.axis {
            if a >= self.dim {
                return Err(EmbedError::InvalidSpec(format!(
                    "axis {a} out of range for dim {}",
                    self.dim
                )));
            }
        }
        Ok(())
    }

    /// Short digest of every field; distinct specs never share a cache.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_string(self).expect("mock spec serializes");
        hex::encode(&Sha256::digest(json.as_bytes())[..6])
    }
}

fn rng_for(parts: &[&[u8]]) -> ChaCha8Rng {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    ChaCha8Rng::from_seed(h.finalize().into())
}

/// Unit vector along which group offsets are planted.
pub fn planted_direction(spec: &MockSpec) -> Vec<f64> {
    let mut u = vec![0.0; spec.dim];
    if let Some(a) = spec.axis {
        u[a] = 1.0;
        return u;
    }
    let mut rng = rng_for(&[b"direction", &spec.seed.to_le_bytes()]);
    loop {
        for x in u.iter_mut() {
            *x = StandardNormal.sample(&mut rng);
        }
        let n = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            u.iter_mut().for_each(|x| *x /= n);
            return u;
        }
    }
}

/// One synthetic vector, deterministic in `(spec.seed, text, group)`.
pub fn mock_generate(
    text: &str,
    group: Option<&str>,
    spec: &MockSpec,
) -> Result<EmbeddingVector, EmbedError> {
    spec.validate()?;
    let offset = match group {
        None => 0.0,
        Some(g) => *spec
            .offsets
            .get(g)
            .ok_or_else(|| EmbedError::UnknownGroup(g.to_string()))?,
    };
    let u = planted_direction(spec);
    let mut rng = rng_for(&[b"dimprobe-mock", &spec.seed.to_le_bytes(), text.as_bytes()]);
    let values = u
        .iter()
        .map(|&ui| {
            let z: f64 = StandardNormal.sample(&mut rng);
            (spec.noise * z + offset * ui) as f32
        })
        .collect();
    EmbeddingVector::new(values)
}

/// Provider backed by [`mock_generate`]; texts are mapped to groups up front.
pub struct MockProvider {
    model_id: String,
    spec: MockSpec,
    groups: HashMap<String, String>,
    calls: AtomicUsize,
}

impl MockProvider {
    pub fn new(model_id: &str, spec: MockSpec) -> Result<Self, EmbedError> {
        spec.validate()?;
        Ok(Self {
            model_id: model_id.to_string(),
            spec,
            groups: HashMap::new(),
            calls: AtomicUsize::new(0),
        })
    }

    /// Assigns each listed text to a planted group.
    pub fn with_groups(mut self, groups: HashMap<String, String>) -> Self {
        self.groups = groups;
        self
    }

    pub fn spec(&self) -> &MockSpec {
        &self.spec
    }

    /// Number of `embed_batch` calls served so far.
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl EmbeddingProvider for MockProvider {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn dim(&self) -> Option<usize> {
        Some(self.spec.dim)
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        if texts.is_empty() {
            return Err(EmbedError::EmptyBatch);
        }
        self.calls.fetch_add(1, Ordering::SeqCst);
        texts
            .iter()
            .map(|t| mock_generate(t, self.groups.get(t).map(String::as_str), &self.spec))
            .collect()
    }
}
