//! Pre-computed vector stores: JSONL with a `meta.json` sidecar, or the
//! compact binary layout.
//!
//! Binary layout (all integers little-endian):
//!
//! ```text
//! magic   8 bytes  "EMBSTOR1"
//! dim     u32
//! count   u64
//! count x { sha256: 32 bytes, values: dim x f32 }
//! ```

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{EmbedError, EmbeddingProvider, EmbeddingVector};

pub const BINARY_MAGIC: [u8; 8] = *b"EMBSTOR1";

/// Text hash and its vector, as stored on disk.
pub type StoreEntry = ([u8; 32], EmbeddingVector);

/// Sidecar describing a store.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreMeta {
    pub model: String,
    pub dim: usize,
}

impl StoreMeta {
    pub fn read(path: &Path) -> Result<Self, EmbedError> {
        let text = fs::read_to_string(path).map_err(|source| EmbedError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| EmbedError::Malformed {
            path: path.to_path_buf(),
            line: e.line() as u64,
            message: e.to_string(),
        })
    }

    pub fn write(&self, path: &Path) -> Result<(), EmbedError> {
        fs::write(
            path,
            serde_json::to_string(self).expect("meta serializes") + "\n",
        )
        .map_err(|source| EmbedError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct StoreLine {
    text_sha256: String,
    vector: EmbeddingVector,
}

pub(crate) fn store_line(hash: &[u8; 32], vector: &EmbeddingVector) -> String {
    serde_json::to_string(&StoreLine {
        text_sha256: hex::encode(hash),
        vector: vector.clone(),
    })
    .expect("store line serializes")
}

fn parse_hash(s: &str) -> Option<[u8; 32]> {
    let bytes = hex::decode(s).ok()?;
    bytes.try_into().ok()
}

pub fn read_jsonl_store(path: &Path) -> Result<Vec<StoreEntry>, EmbedError> {
    let io = |source| EmbedError::Io {
        path: path.to_path_buf(),
        source,
    };
    let reader = BufReader::new(File::open(path).map_err(io)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |message: String| EmbedError::Malformed {
            path: path.to_path_buf(),
            line: i as u64 + 1,
            message,
        };
        let parsed: StoreLine =
            serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?;
        let hash = parse_hash(&parsed.text_sha256)
            .ok_or_else(|| malformed(format!("bad text_sha256 {:?}", parsed.text_sha256)))?;
        out.push((hash, parsed.vector));
    }
    Ok(out)
}

/// Writes a JSONL store in the given entry order.
pub fn write_jsonl_store(path: &Path, entries: &[StoreEntry]) -> Result<(), EmbedError> {
    let io = |source| EmbedError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    for (hash, v) in entries {
        writeln!(w, "{}", store_line(hash, v)).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn write_binary_store(
    path: &Path,
    dim: usize,
    entries: &[StoreEntry],
) -> Result<(), EmbedError> {
    let io = |source| EmbedError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dim32 =
        u32::try_from(dim).map_err(|_| EmbedError::InvalidSpec(format!("dim {dim} too large")))?;
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    w.write_all(&BINARY_MAGIC).map_err(io)?;
    w.write_all(&dim32.to_le_bytes()).map_err(io)?;
    w.write_all(&(entries.len() as u64).to_le_bytes())
        .map_err(io)?;
    for (hash, v) in entries {
        if v.dim() != dim {
            return Err(EmbedError::DimensionMismatch {
                expected: dim,
                found: v.dim(),
            });
        }
        w.write_all(hash).map_err(io)?;
        for x in v.values() {
            w.write_all(&x.to_le_bytes()).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

/// Returns the declared dimension and all entries.
pub fn read_binary_store(path: &Path) -> Result<(usize, Vec<StoreEntry>), EmbedError> {
    let io = |source| EmbedError::Io {
        path: path.to_path_buf(),
        source,
    };
    let malformed = |message: &str| EmbedError::Malformed {
        path: path.to_path_buf(),
        line: 0,
        message: message.to_string(),
    };
    let mut r = BufReader::new(File::open(path).map_err(io)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)
        .map_err(|_| malformed("truncated header"))?;
    if magic != BINARY_MAGIC {
        return Err(malformed("bad magic"));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4)
        .map_err(|_| malformed("truncated header"))?;
    let dim = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b8)
        .map_err(|_| malformed("truncated header"))?;
    let count = u64::from_le_bytes(b8);
    if dim == 0 {
        return Err(malformed("zero dimension"));
    }
    let mut out = Vec::new();
    for _ in 0..count {
        let mut hash = [0u8; 32];
        r.read_exact(&mut hash)
            .map_err(|_| malformed("truncated entry"))?;
        let mut values = Vec::with_capacity(dim);
        for _ in 0..dim {
            r.read_exact(&mut b4)
                .map_err(|_| malformed("truncated entry"))?;
            values.push(f32::from_le_bytes(b4));
        }
        out.push((hash, EmbeddingVector::new(values)?));
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest).map_err(io)? != 0 {
        return Err(malformed("trailing bytes after last entry"));
    }
    Ok((dim, out))
}

/// Serves vectors from a pre-computed store keyed by text hash.
pub struct FileProvider {
    model_id: String,
    dim: usize,
    vectors: HashMap<[u8; 32], EmbeddingVector>,
}

impl FileProvider {
    /// Opens a `.jsonl` or `.bin` store. The sidecar is `<stem>.meta.json`
    /// or, failing that, `meta.json` in the same directory.
    pub fn open(model_id: &str, path: &Path) -> Result<Self, EmbedError> {
        let meta_path = sidecar_for(path).ok_or_else(|| EmbedError::Io {
            path: path.with_file_name("meta.json"),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "missing meta.json sidecar"),
        })?;
        let meta = StoreMeta::read(&meta_path)?;
        if meta.model != model_id {
            return Err(EmbedError::ModelMismatch {
                path: meta_path,
                expected: model_id.to_string(),
                found: meta.model,
            });
        }
        let entries = if path.extension().is_some_and(|e| e == "bin") {
            let (dim, entries) = read_binary_store(path)?;
            if dim != meta.dim {
                return Err(EmbedError::DimensionMismatch {
                    expected: meta.dim,
                    found: dim,
                });
            }
            entries
        } else {
            read_jsonl_store(path)?
        };
        let mut vectors = HashMap::with_capacity(entries.len());
        for (hash, v) in entries {
            if v.dim() != meta.dim {
                return Err(EmbedError::DimensionMismatch {
                    expected: meta.dim,
                    found: v.dim(),
                });
            }
            vectors.insert(hash, v);
        }
        Ok(Self {
            model_id: model_id.to_string(),
            dim: meta.dim,
            vectors,
        })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

fn sidecar_for(path: &Path) -> Option<PathBuf> {
    let stem = path.file_stem()?.to_string_lossy().to_string();
    let specific = path.with_file_name(format!("{stem}.meta.json"));
    if specific.exists() {
        return Some(specific);
    }
    let shared = path.with_file_name("meta.json");
    shared.exists().then_some(shared)
}

impl EmbeddingProvider for FileProvider {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn dim(&self) -> Option<usize> {
        Some(self.dim)
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        texts
            .iter()
            .map(|t| {
                let hash: [u8; 32] = Sha256::digest(t.as_bytes()).into();
                self.vectors
                    .get(&hash)
                    .cloned()
                    .ok_or_else(|| EmbedError::MissingText {
                        hash: hex::encode(hash),
                    })
            })
            .collect()
    }
}
