//! Per-language analyses of the dominant direction.
//!
//! Prompt embeddings are averaged into concept vectors, the first principal
//! direction is fitted over them, and the resulting scores are read against
//! country labels, GDP and job prestige.

mod dimension;
mod job;
mod summary;

pub use dimension::{
    analyze_dominant_dimension, interpret_axis, AxisInterpretation, DimensionAnalysis, Orientation,
};
pub use job::{fit_job_axis, job_accuracy, JobAxisResult};
pub use summary::{
    analyze_language, summarize_language, LanguageAnalysis, LanguageRow, ProbeContext, SetSummary,
};

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{PromptRecord, SetKind, Side};
use crate::embed::EmbeddingVector;
use crate::numerics::NumericsError;

#[derive(Debug, Error)]
pub enum ProbeError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("{prompts} prompts but {vectors} vectors")]
    Misaligned { prompts: usize, vectors: usize },
    #[error("no prompts to average")]
    NoPrompts,
    #[error("vector for {entity_id} has dimension {found}, expected {expected}")]
    DimensionMismatch {
        entity_id: String,
        expected: usize,
        found: usize,
    },
    #[error("need at least {required} entities, got {found}")]
    TooFewEntities { required: usize, found: usize },
    #[error("no GDP value for country {0}")]
    MissingGdp(String),
    #[error("country {0} is not in the label table")]
    UnknownCountry(String),
    #[error("job {0} has no prestige class")]
    MissingClass(String),
    #[error("job concepts cover only the {0:?} prestige class")]
    SingleClass(crate::corpus::PrestigeClass),
    #[error("no {set_kind} concepts for language {language}")]
    MissingSet { language: String, set_kind: SetKind },
}

/// Mean embedding of every prompt mentioning one entity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptEmbedding {
    pub entity_id: String,
    pub language: String,
    pub set_kind: SetKind,
    pub prompt_count: usize,
    pub vector: Vec<f64>,
}

/// Pearson (or Spearman) coefficient of projections against one label's
/// 0/1 indicator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelCorrelation {
    pub label: String,
    pub r: f64,
    pub side: Side,
}

/// Averages prompt vectors per `(language, set_kind, entity)`, keeping the
/// order in which each group first appears.
pub fn concept_embeddings(
    prompts: &[PromptRecord],
    vectors: &[EmbeddingVector],
) -> Result<Vec<ConceptEmbedding>, ProbeError> {
    if prompts.len() != vectors.len() {
        return Err(ProbeError::Misaligned {
            prompts: prompts.len(),
            vectors: vectors.len(),
        });
    }
    if prompts.is_empty() {
        return Err(ProbeError::NoPrompts);
    }
    let dim = vectors[0].dim();
    let mut index: HashMap<(&str, SetKind, &str), usize> = HashMap::new();
    let mut out: Vec<ConceptEmbedding> = Vec::new();
    for (p, v) in prompts.iter().zip(vectors) {
        if v.dim() != dim {
            return Err(ProbeError::DimensionMismatch {
                entity_id: p.entity_id.clone(),
                expected: dim,
                found: v.dim(),
            });
        }
        let key = (p.language.as_str(), p.set_kind, p.entity_id.as_str());
        let slot = *index.entry(key).or_insert_with(|| {
            out.push(ConceptEmbedding {
                entity_id: p.entity_id.clone(),
                language: p.language.clone(),
                set_kind: p.set_kind,
                prompt_count: 0,
                vector: vec![0.0; dim],
            });
            out.len() - 1
        });
        let c = &mut out[slot];
        c.prompt_count += 1;
        for (acc, x) in c.vector.iter_mut().zip(v.values()) {
            *acc += f64::from(*x);
        }
    }
    for c in &mut out {
        let n = c.prompt_count as f64;
        c.vector.iter_mut().for_each(|x| *x /= n);
    }
    Ok(out)
}
