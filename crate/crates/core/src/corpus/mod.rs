//! Templates, entity catalogs, country reference data and prompt corpora.

mod catalog;
mod prompts;

pub use catalog::{load_catalog, Catalog, CatalogPaths, LoadOptions};
pub use prompts::{
    materialize_prompts, read_prompts, validate_corpus, write_prompts, ExpectedCorpus, Finding,
    ValidationReport,
};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::Coordinate;

pub const COUNTRY_SLOT: &str = "[COUNTRY]";
pub const JOB_SLOT: &str = "[JOB]";

#[derive(Debug, Error)]
pub enum CorpusError {
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
    #[error("{path}, line {line}: unknown label {label:?}")]
    UnknownLabel {
        path: PathBuf,
        line: u64,
        label: String,
    },
    #[error("{path}, line {line}: unknown country {id:?}")]
    UnknownCountry {
        path: PathBuf,
        line: u64,
        id: String,
    },
    #[error("{path}, line {line}: duplicate id {id:?}")]
    DuplicateId {
        path: PathBuf,
        line: u64,
        id: String,
    },
    #[error("no entities of kind {0}")]
    NoEntities(EntityKind),
    #[error("template {template} ({set_kind}) cannot be filled with {entity} of kind {kind}")]
    KindMismatch {
        template: usize,
        set_kind: SetKind,
        entity: String,
        kind: EntityKind,
    },
    #[error("template {template} is in language {found}, expected {expected}")]
    LanguageMismatch {
        template: usize,
        expected: String,
        found: String,
    },
    #[error("entity {entity:?} has no surface form for language {language:?}")]
    MissingSurfaceForm { entity: String, language: String },
    #[error("invalid template: {0}")]
    InvalidTemplate(String),
}

/// The three template families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetKind {
    CountryOrigin,
    CountryPrestige,
    JobPrestige,
}

impl SetKind {
    pub const ALL: [SetKind; 3] = [
        SetKind::CountryOrigin,
        SetKind::CountryPrestige,
        SetKind::JobPrestige,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SetKind::CountryOrigin => "country_origin",
            SetKind::CountryPrestige => "country_prestige",
            SetKind::JobPrestige => "job_prestige",
        }
    }

    pub fn slot(self) -> &'static str {
        match self.entity_kind() {
            EntityKind::Country => COUNTRY_SLOT,
            EntityKind::Job => JOB_SLOT,
        }
    }

    pub fn entity_kind(self) -> EntityKind {
        match self {
            SetKind::CountryOrigin | SetKind::CountryPrestige => EntityKind::Country,
            SetKind::JobPrestige => EntityKind::Job,
        }
    }
}

impl fmt::Display for SetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SetKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SetKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown set kind {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    Country,
    Job,
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EntityKind::Country => "Country",
            EntityKind::Job => "Job",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrestigeClass {
    Low,
    High,
}

/// A sentence pattern with a single entity slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Template {
    pub set_kind: SetKind,
    pub language: String,
    pub index: usize,
    pub text: String,
}

impl Template {
    pub fn new(
        set_kind: SetKind,
        language: impl Into<String>,
        index: usize,
        text: impl Into<String>,
    ) -> Result<Self, CorpusError> {
        let t = Self {
            set_kind,
            language: language.into(),
            index,
            text: text.into(),
        };
        t.check()?;
        Ok(t)
    }

    fn check(&self) -> Result<(), CorpusError> {
        let countries = self.text.matches(COUNTRY_SLOT).count();
        let jobs = self.text.matches(JOB_SLOT).count();
        if countries + jobs != 1 {
            return Err(CorpusError::InvalidTemplate(format!(
                "{:?} must contain exactly one slot token",
                self.text
            )));
        }
        if !self.text.contains(self.set_kind.slot()) {
            return Err(CorpusError::InvalidTemplate(format!(
                "{:?} does not use the {} slot required by {}",
                self.text,
                self.set_kind.slot(),
                self.set_kind
            )));
        }
        Ok(())
    }

    pub fn fill(&self, surface: &str) -> String {
        self.text.replacen(self.set_kind.slot(), surface, 1)
    }
}

/// A country or a job, with its surface form per language.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entity {
    pub id: String,
    pub kind: EntityKind,
    pub surface_forms: BTreeMap<String, String>,
    pub prestige_class: Option<PrestigeClass>,
}

impl Entity {
    pub fn surface(&self, language: &str) -> Option<&str> {
        self.surface_forms.get(language).map(String::as_str)
    }
}

/// One materialized sentence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PromptRecord {
    pub language: String,
    pub set_kind: SetKind,
    pub entity_id: String,
    pub template_index: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountryRecord {
    pub id: String,
    pub name_en: String,
    pub gdp_ppp_2019: f64,
    pub coordinate: Coordinate,
    pub labels: BTreeSet<String>,
}

/// Which side of the east-west division a label stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    East,
    West,
    Neutral,
}

impl std::str::FromStr for Side {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "east" => Ok(Side::East),
            "west" => Ok(Side::West),
            "neutral" => Ok(Side::Neutral),
            other => Err(format!("unknown side {other:?}")),
        }
    }
}

/// Boolean country x label indicator matrix plus the east/west partition of
/// the label vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelTable {
    pub labels: Vec<String>,
    pub country_ids: Vec<String>,
    pub matrix: Vec<Vec<bool>>,
    pub partition: BTreeMap<String, Side>,
}

impl LabelTable {
    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn country_index(&self, id: &str) -> Option<usize> {
        self.country_ids.iter().position(|c| c == id)
    }

    pub fn side(&self, label: &str) -> Side {
        self.partition.get(label).copied().unwrap_or(Side::Neutral)
    }

    pub fn has(&self, country: &str, label: &str) -> bool {
        match (self.country_index(country), self.label_index(label)) {
            (Some(c), Some(l)) => self.matrix[c][l],
            _ => false,
        }
    }

    /// 0/1 indicator of `label` over `countries`, in that order.
    pub fn indicator(&self, label: &str, countries: &[String]) -> Option<Vec<f64>> {
        let l = self.label_index(label)?;
        countries
            .iter()
            .map(|c| {
                self.country_index(c)
                    .map(|ci| if self.matrix[ci][l] { 1.0 } else { 0.0 })
            })
            .collect()
    }

    pub fn row_sum(&self, country: &str) -> Option<usize> {
        let c = self.country_index(country)?;
        Some(self.matrix[c].iter().filter(|b| **b).count())
    }

    /// Majority side over a country's labels; ties and label-free countries
    /// are neutral.
    pub fn country_side(&self, country: &str) -> Side {
        let Some(c) = self.country_index(country) else {
            return Side::Neutral;
        };
        let (mut east, mut west) = (0usize, 0usize);
        for (l, present) in self.matrix[c].iter().enumerate() {
            if *present {
                match self.side(&self.labels[l]) {
                    Side::East => east += 1,
                    Side::West => west += 1,
                    Side::Neutral => {}
                }
            }
        }
        match west.cmp(&east) {
            std::cmp::Ordering::Greater => Side::West,
            std::cmp::Ordering::Less => Side::East,
            std::cmp::Ordering::Equal => Side::Neutral,
        }
    }
}

/// Pairwise language similarity keyed by unordered language pair.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LexicalSimilarityTable {
    entries: BTreeMap<(String, String), f64>,
}

impl LexicalSimilarityTable {
    fn key(a: &str, b: &str) -> (String, String) {
        if a <= b {
            (a.to_string(), b.to_string())
        } else {
            (b.to_string(), a.to_string())
        }
    }

    /// Inserts a pair. Self-pairs must have similarity 1 and values must lie
    /// in `[0, 1]`.
    pub fn insert(&mut self, a: &str, b: &str, similarity: f64) -> Result<(), String> {
        if !(0.0..=1.0).contains(&similarity) {
            return Err(format!("similarity {similarity} outside [0, 1]"));
        }
        if a == b && similarity != 1.0 {
            return Err(format!(
                "self-similarity of {a} must be 1, got {similarity}"
            ));
        }
        let key = Self::key(a, b);
        if let Some(prev) = self.entries.get(&key) {
            if *prev != similarity {
                return Err(format!("conflicting similarity for {a}-{b}"));
            }
        }
        self.entries.insert(key, similarity);
        Ok(())
    }

    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        if a == b {
            return Some(1.0);
        }
        self.entries.get(&Self::key(a, b)).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
