use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    Catalog, CorpusError, Entity, PromptRecord, SetKind, Template, COUNTRY_SLOT, JOB_SLOT,
};

/// Fills every template with every entity.
///
/// Output order is entity-major: all templates of the first entity (by
/// template index), then the second entity, and so on.
pub fn materialize_prompts(
    templates: &[Template],
    entities: &[Entity],
    language: &str,
) -> Result<Vec<PromptRecord>, CorpusError> {
    let mut ordered: Vec<&Template> = templates.iter().collect();
    ordered.sort_by_key(|t| (t.set_kind, t.index));
    for t in &ordered {
        if t.language != language {
            return Err(CorpusError::LanguageMismatch {
                template: t.index,
                expected: language.to_string(),
                found: t.language.clone(),
            });
        }
    }

    let mut out = Vec::with_capacity(templates.len() * entities.len());
    for entity in entities {
        for t in &ordered {
            if t.set_kind.entity_kind() != entity.kind {
                return Err(CorpusError::KindMismatch {
                    template: t.index,
                    set_kind: t.set_kind,
                    entity: entity.id.clone(),
                    kind: entity.kind,
                });
            }
            let surface =
                entity
                    .surface(language)
                    .ok_or_else(|| CorpusError::MissingSurfaceForm {
                        entity: entity.id.clone(),
                        language: language.to_string(),
                    })?;
            out.push(PromptRecord {
                language: language.to_string(),
                set_kind: t.set_kind,
                entity_id: entity.id.clone(),
                template_index: t.index,
                text: t.fill(surface),
            });
        }
    }
    Ok(out)
}

pub fn write_prompts(path: &Path, records: &[PromptRecord]) -> Result<(), CorpusError> {
    let io = |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    for r in records {
        let line = serde_json::to_string(r).expect("prompt records serialize");
        writeln!(w, "{line}").map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_prompts(path: &Path) -> Result<Vec<PromptRecord>, CorpusError> {
    let io = |source| CorpusError::Io {
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
        let rec: PromptRecord =
            serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
                path: path.to_path_buf(),
                line: i as u64 + 1,
                message: e.to_string(),
            })?;
        out.push(rec);
    }
    Ok(out)
}

/// What a complete corpus must contain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpectedCorpus {
    pub languages: Vec<String>,
    /// Entity ids per set.
    pub entities: BTreeMap<SetKind, Vec<String>>,
    /// Template indices per set.
    pub template_indices: BTreeMap<SetKind, BTreeSet<usize>>,
}

impl ExpectedCorpus {
    /// Expected cells for `languages`. Template indices come from the
    /// `source_language` templates since translated corpora inherit them.
    pub fn from_catalog(catalog: &Catalog, languages: &[String], source_language: &str) -> Self {
        let mut entities = BTreeMap::new();
        let mut template_indices = BTreeMap::new();
        for kind in SetKind::ALL {
            entities.insert(
                kind,
                catalog
                    .entities
                    .iter()
                    .filter(|e| e.kind == kind.entity_kind())
                    .map(|e| e.id.clone())
                    .collect(),
            );
            template_indices.insert(
                kind,
                catalog
                    .templates_for(kind, source_language)
                    .iter()
                    .map(|t| t.index)
                    .collect(),
            );
        }
        Self {
            languages: languages.to_vec(),
            entities,
            template_indices,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Finding {
    MissingCell {
        language: String,
        set_kind: SetKind,
        entity_id: String,
    },
    MissingTemplates {
        language: String,
        set_kind: SetKind,
        entity_id: String,
        missing: Vec<usize>,
    },
    Duplicate {
        language: String,
        set_kind: SetKind,
        entity_id: String,
        template_index: usize,
    },
    ResidualSlot {
        language: String,
        set_kind: SetKind,
        entity_id: String,
        template_index: usize,
    },
    TextCollision {
        language: String,
        set_kind: SetKind,
        text: String,
        entity_ids: Vec<String>,
    },
    Unexpected {
        language: String,
        set_kind: SetKind,
        entity_id: String,
        template_index: usize,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn extend(&mut self, other: ValidationReport) {
        self.findings.extend(other.findings);
    }
}

/// Checks a corpus against the expected cells. Never fails; every problem is
/// a finding.
pub fn validate_corpus(records: &[PromptRecord], expected: &ExpectedCorpus) -> ValidationReport {
    let mut findings = Vec::new();
    type Cell<'a> = (&'a str, SetKind, &'a str);
    let mut seen: HashMap<(Cell, usize), usize> = HashMap::new();
    let mut present: HashMap<Cell, BTreeSet<usize>> = HashMap::new();
    let mut texts: BTreeMap<(&str, SetKind, &str), BTreeSet<&str>> = BTreeMap::new();

    for r in records {
        let cell: Cell = (r.language.as_str(), r.set_kind, r.entity_id.as_str());
        let known = expected.languages.iter().any(|l| l == &r.language)
            && expected
                .entities
                .get(&r.set_kind)
                .is_some_and(|ids| ids.iter().any(|id| id == &r.entity_id))
            && expected
                .template_indices
                .get(&r.set_kind)
                .is_some_and(|ix| ix.contains(&r.template_index));
        if !known {
            findings.push(Finding::Unexpected {
                language: r.language.clone(),
                set_kind: r.set_kind,
                entity_id: r.entity_id.clone(),
                template_index: r.template_index,
            });
        }
        let count = seen.entry((cell, r.template_index)).or_insert(0);
        *count += 1;
        if *count == 2 {
            findings.push(Finding::Duplicate {
                language: r.language.clone(),
                set_kind: r.set_kind,
                entity_id: r.entity_id.clone(),
                template_index: r.template_index,
            });
        }
        if r.text.contains(COUNTRY_SLOT) || r.text.contains(JOB_SLOT) {
            findings.push(Finding::ResidualSlot {
                language: r.language.clone(),
                set_kind: r.set_kind,
                entity_id: r.entity_id.clone(),
                template_index: r.template_index,
            });
        }
        present.entry(cell).or_default().insert(r.template_index);
        texts
            .entry((r.language.as_str(), r.set_kind, r.text.as_str()))
            .or_default()
            .insert(r.entity_id.as_str());
    }

    for language in &expected.languages {
        for (kind, ids) in &expected.entities {
            let wanted = &expected.template_indices[kind];
            for id in ids {
                match present.get(&(language.as_str(), *kind, id.as_str())) {
                    None => findings.push(Finding::MissingCell {
                        language: language.clone(),
                        set_kind: *kind,
                        entity_id: id.clone(),
                    }),
                    Some(have) => {
                        let missing: Vec<usize> = wanted.difference(have).copied().collect();
                        if !missing.is_empty() {
                            findings.push(Finding::MissingTemplates {
                                language: language.clone(),
                                set_kind: *kind,
                                entity_id: id.clone(),
                                missing,
                            });
                        }
                    }
                }
            }
        }
    }

    for ((language, kind, text), ids) in texts {
        if ids.len() > 1 {
            findings.push(Finding::TextCollision {
                language: language.to_string(),
                set_kind: kind,
                text: text.to_string(),
                entity_ids: ids.into_iter().map(str::to_string).collect(),
            });
        }
    }

    ValidationReport { findings }
}
