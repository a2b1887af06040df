use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use sha2::{Digest, Sha256};

use super::file::{read_jsonl_store, store_line, StoreMeta};
use super::{EmbedError, EmbeddingVector};

/// Identifies one cached vector: the model and the SHA-256 of the exact text.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CacheKey {
    pub model_id: String,
    pub text_sha256: [u8; 32],
}

impl CacheKey {
    pub fn new(model_id: &str, text: &str) -> Self {
        Self {
            model_id: model_id.to_string(),
            text_sha256: Sha256::digest(text.as_bytes()).into(),
        }
    }

    /// Single digest over model id and text hash.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.model_id.len() as u64).to_le_bytes());
        h.update(self.model_id.as_bytes());
        h.update(self.text_sha256);
        hex::encode(h.finalize())
    }
}

type ModelEntries = BTreeMap<[u8; 32], EmbeddingVector>;

/// On-disk (or in-memory) vector cache, one JSONL file per model.
///
/// Readers run concurrently; writes are serialized. Each new entry is
/// appended as soon as it is put; [`EmbeddingCache::compact`] rewrites the
/// files sorted by hash so their bytes depend only on their contents.
pub struct EmbeddingCache {
    dir: Option<PathBuf>,
    models: RwLock<BTreeMap<String, ModelEntries>>,
    writer: Mutex<()>,
}

impl EmbeddingCache {
    pub fn in_memory() -> Self {
        Self {
            dir: None,
            models: RwLock::new(BTreeMap::new()),
            writer: Mutex::new(()),
        }
    }

    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, EmbedError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|source| EmbedError::Io {
            path: dir.clone(),
            source,
        })?;
        Ok(Self {
            dir: Some(dir),
            models: RwLock::new(BTreeMap::new()),
            writer: Mutex::new(()),
        })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    /// JSONL file holding `model_id`'s vectors.
    pub fn model_file(&self, model_id: &str) -> Option<PathBuf> {
        self.dir
            .as_ref()
            .map(|d| d.join(format!("{}.jsonl", file_stem(model_id))))
    }

    fn meta_file(&self, model_id: &str) -> Option<PathBuf> {
        self.dir
            .as_ref()
            .map(|d| d.join(format!("{}.meta.json", file_stem(model_id))))
    }

    fn ensure_loaded(&self, model_id: &str) -> Result<(), EmbedError> {
        if self
            .models
            .read()
            .expect("cache lock")
            .contains_key(model_id)
        {
            return Ok(());
        }
        let mut entries = ModelEntries::new();
        if let (Some(file), Some(meta)) = (self.model_file(model_id), self.meta_file(model_id)) {
            if meta.exists() {
                let m = StoreMeta::read(&meta)?;
                if m.model != model_id {
                    return Err(EmbedError::ModelMismatch {
                        path: meta,
                        expected: model_id.to_string(),
                        found: m.model,
                    });
                }
            }
            if file.exists() {
                for (hash, v) in read_jsonl_store(&file)? {
                    entries.insert(hash, v);
                }
            }
        }
        self.models
            .write()
            .expect("cache lock")
            .entry(model_id.to_string())
            .or_insert(entries);
        Ok(())
    }

    pub fn get(&self, key: &CacheKey) -> Result<Option<EmbeddingVector>, EmbedError> {
        self.ensure_loaded(&key.model_id)?;
        Ok(self
            .models
            .read()
            .expect("cache lock")
            .get(&key.model_id)
            .and_then(|m| m.get(&key.text_sha256))
            .cloned())
    }

    /// Stores a vector. Re-putting an identical entry is a no-op.
    pub fn put(&self, key: CacheKey, vector: EmbeddingVector) -> Result<(), EmbedError> {
        self.ensure_loaded(&key.model_id)?;
        let _guard = self.writer.lock().expect("cache writer lock");
        {
            let models = self.models.read().expect("cache lock");
            if let Some(existing) = models
                .get(&key.model_id)
                .and_then(|m| m.get(&key.text_sha256))
            {
                if existing.bit_eq(&vector) {
                    return Ok(());
                }
            }
        }
        if let (Some(file), Some(meta)) = (
            self.model_file(&key.model_id),
            self.meta_file(&key.model_id),
        ) {
            if !meta.exists() {
                StoreMeta {
                    model: key.model_id.clone(),
                    dim: vector.dim(),
                }
                .write(&meta)?;
            }
            let io = |source| EmbedError::Io {
                path: file.clone(),
                source,
            };
            let mut f = OpenOptions::new()
                .create(true)
                .append(true)
                .open(&file)
                .map_err(io)?;
            writeln!(f, "{}", store_line(&key.text_sha256, &vector)).map_err(io)?;
        }
        self.models
            .write()
            .expect("cache lock")
            .entry(key.model_id)
            .or_default()
            .insert(key.text_sha256, vector);
        Ok(())
    }

    /// Number of entries held for `model_id`.
    pub fn len(&self, model_id: &str) -> Result<usize, EmbedError> {
        self.ensure_loaded(model_id)?;
        Ok(self
            .models
            .read()
            .expect("cache lock")
            .get(model_id)
            .map_or(0, BTreeMap::len))
    }

    /// Rewrites every loaded model file in hash order, dropping superseded lines.
    pub fn compact(&self) -> Result<(), EmbedError> {
        let _guard = self.writer.lock().expect("cache writer lock");
        let models = self.models.read().expect("cache lock");
        for (model_id, entries) in models.iter() {
            let Some(file) = self.model_file(model_id) else {
                continue;
            };
            if entries.is_empty() {
                continue;
            }
            let tmp = file.with_extension("jsonl.tmp");
            let io = |source| EmbedError::Io {
                path: tmp.clone(),
                source,
            };
            let mut w = BufWriter::new(File::create(&tmp).map_err(io)?);
            for (hash, v) in entries {
                writeln!(w, "{}", store_line(hash, v)).map_err(io)?;
            }
            w.flush().map_err(io)?;
            drop(w);
            fs::rename(&tmp, &file).map_err(|source| EmbedError::Io {
                path: file.clone(),
                source,
            })?;
        }
        Ok(())
    }
}

fn file_stem(model_id: &str) -> String {
    model_id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_') {
                c
            } else {
                '_'
            }
        })
        .collect()
}
