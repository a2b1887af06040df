//! Stage orchestration behind the command-line tool.
//!
//! Each stage writes under the run's output directory and reuses whatever
//! earlier stages left there, so any stage can be re-run on its own.

mod config;

pub use config::{
    default_mock, AnalysisSection, DataSection, ProviderKind, ProviderSection, RunConfig,
    RunSection,
};

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{
    load_catalog, materialize_prompts, read_prompts, validate_corpus, write_prompts, Catalog,
    CatalogPaths, CorpusError, EntityKind, ExpectedCorpus, PromptRecord, SetKind, Side,
    ValidationReport,
};
use crate::crosslang::{job_axis_matrix, second_order, CrossLangError, CrossLanguageReport};
use crate::embed::{
    build_provider, embed_texts, EmbedError, EmbeddingCache, EmbeddingProvider, EmbeddingVector,
};
use crate::probe::{
    analyze_language, concept_embeddings, summarize_language, LanguageAnalysis, ProbeContext,
    ProbeError,
};
use crate::report::{emit_reports, ReportError, ReportInputs};

/// Language whose templates define the expected template indices.
pub const SOURCE_LANGUAGE: &str = "en";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("language {language:?} is not configured (configured: {})", configured.join(", "))]
    UnconfiguredLanguage {
        language: String,
        configured: Vec<String>,
    },
    #[error("no prompts for language {language:?}: provide {expected} or templates and surface forms for it")]
    MissingPrompts { language: String, expected: PathBuf },
    #[error("{path}: {message}")]
    Malformed { path: PathBuf, message: String },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error("analysis of {language} failed: {source}")]
    Probe {
        language: String,
        #[source]
        source: ProbeError,
    },
    #[error(transparent)]
    CrossLang(#[from] CrossLangError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("worker pool: {0}")]
    Pool(String),
}

/// Outcome of the embed stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbedSummary {
    pub prompts: usize,
    /// Texts the provider had to embed; the rest came from the cache.
    pub provider_texts: usize,
}

/// Problems found by `validate`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationOutcome {
    pub corpus: ValidationReport,
    pub config: Vec<String>,
}

impl ValidationOutcome {
    pub fn is_clean(&self) -> bool {
        self.corpus.is_empty() && self.config.is_empty()
    }
}

/// Counts the texts that actually reach the wrapped provider.
struct Counting {
    inner: Box<dyn EmbeddingProvider>,
    texts: AtomicUsize,
}

impl EmbeddingProvider for Counting {
    fn model_id(&self) -> &str {
        self.inner.model_id()
    }

    fn dim(&self) -> Option<usize> {
        self.inner.dim()
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        self.texts.fetch_add(texts.len(), Ordering::SeqCst);
        self.inner.embed_batch(texts)
    }
}

pub struct Pipeline {
    config: RunConfig,
    catalog: Catalog,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let text = serde_json::to_string_pretty(value).expect("results serialize") + "\n";
    fs::write(path, text).map_err(io_err(path))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, PipelineError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    serde_json::from_slice(&bytes).map_err(|e| PipelineError::Malformed {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

impl Pipeline {
    pub fn new(config: RunConfig) -> Result<Self, PipelineError> {
        let options = crate::corpus::LoadOptions {
            exclude_countries: config.analysis.exclude_countries.clone(),
        };
        let catalog = load_catalog(&CatalogPaths::in_dir(&config.data.dir), &options)?;
        Ok(Self { config, catalog })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    fn languages(&self) -> &[String] {
        &self.config.run.languages
    }

    fn pool(&self) -> Result<rayon::ThreadPool, PipelineError> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.config.run.jobs)
            .build()
            .map_err(|e| PipelineError::Pool(e.to_string()))
    }

    fn translated_prompts_file(&self, language: &str) -> Option<PathBuf> {
        self.config
            .data
            .prompts_dir
            .as_ref()
            .map(|d| d.join(format!("prompts.{language}.jsonl")))
    }

    /// Prompts for `language` from the translation directory, or else
    /// materialized from the catalog's templates.
    pub fn source_prompts(&self, language: &str) -> Result<Vec<PromptRecord>, PipelineError> {
        if let Some(file) = self
            .translated_prompts_file(language)
            .filter(|f| f.exists())
        {
            let excluded = &self.config.analysis.exclude_countries;
            return Ok(read_prompts(&file)?
                .into_iter()
                .filter(|r| {
                    !(r.set_kind.entity_kind() == EntityKind::Country
                        && excluded.contains(&r.entity_id))
                })
                .collect());
        }
        if SetKind::ALL
            .iter()
            .any(|&k| self.catalog.templates_for(k, language).is_empty())
        {
            return Err(PipelineError::MissingPrompts {
                language: language.to_string(),
                expected: self.translated_prompts_file(language).unwrap_or_else(|| {
                    PathBuf::from(format!("<data.prompts_dir>/prompts.{language}.jsonl"))
                }),
            });
        }
        let mut out = Vec::new();
        for kind in SetKind::ALL {
            out.extend(materialize_prompts(
                &self.catalog.templates_for(kind, language),
                &self.catalog.entities_of(kind.entity_kind()),
                language,
            )?);
        }
        Ok(out)
    }

    fn prompts_file(&self, language: &str) -> PathBuf {
        self.config
            .prompts_dir()
            .join(format!("prompts.{language}.jsonl"))
    }

    /// Writes every configured language's prompts.
    pub fn materialize(&self) -> Result<Vec<PathBuf>, PipelineError> {
        let dir = self.config.prompts_dir();
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let mut written = Vec::new();
        for language in self.languages() {
            let records = self.source_prompts(language)?;
            let path = self.prompts_file(language);
            write_prompts(&path, &records)?;
            written.push(path);
        }
        Ok(written)
    }

    fn prompts(&self, language: &str) -> Result<Vec<PromptRecord>, PipelineError> {
        let path = self.prompts_file(language);
        if path.exists() {
            return Ok(read_prompts(&path)?);
        }
        let records = self.source_prompts(language)?;
        fs::create_dir_all(self.config.prompts_dir())
            .map_err(io_err(&self.config.prompts_dir()))?;
        write_prompts(&path, &records)?;
        Ok(records)
    }

    fn all_prompts(&self) -> Result<Vec<(String, Vec<PromptRecord>)>, PipelineError> {
        self.languages()
            .iter()
            .map(|l| Ok((l.clone(), self.prompts(l)?)))
            .collect()
    }

    /// Planted group of every prompt text: countries by their east/west
    /// side, jobs by prestige class. A mock spec without offsets plants
    /// nothing.
    fn text_groups(&self, prompts: &[(String, Vec<PromptRecord>)]) -> HashMap<String, String> {
        let mut groups = HashMap::new();
        if self.config.mock.offsets.is_empty() {
            return groups;
        }
        let classes = self.catalog.job_classes();
        for (_, records) in prompts {
            for r in records {
                let group = match r.set_kind.entity_kind() {
                    EntityKind::Country => {
                        match self.catalog.label_table.country_side(&r.entity_id) {
                            Side::West => Some("west"),
                            Side::East => Some("east"),
                            Side::Neutral => None,
                        }
                    }
                    EntityKind::Job => classes.get(&r.entity_id).map(|c| match c {
                        crate::corpus::PrestigeClass::High => "high",
                        crate::corpus::PrestigeClass::Low => "low",
                    }),
                };
                if let Some(g) = group {
                    groups.insert(r.text.clone(), g.to_string());
                }
            }
        }
        groups
    }

    fn provider(&self, prompts: &[(String, Vec<PromptRecord>)]) -> Result<Counting, PipelineError> {
        let inner = build_provider(&self.config.provider_config()?, self.text_groups(prompts))?;
        Ok(Counting {
            inner,
            texts: AtomicUsize::new(0),
        })
    }

    fn cache(&self) -> Result<EmbeddingCache, PipelineError> {
        Ok(EmbeddingCache::open(self.config.embeddings_dir())?)
    }

    fn embed_all(
        &self,
        prompts: &[(String, Vec<PromptRecord>)],
    ) -> Result<(Vec<Vec<EmbeddingVector>>, EmbedSummary), PipelineError> {
        let provider = self.provider(prompts)?;
        let cache = self.cache()?;
        let vectors = self.pool()?.install(|| {
            prompts
                .par_iter()
                .map(|(_, records)| {
                    let texts: Vec<String> = records.iter().map(|r| r.text.clone()).collect();
                    embed_texts(&texts, &provider, Some(&cache))
                })
                .collect::<Result<Vec<_>, _>>()
        })?;
        cache.compact()?;
        let summary = EmbedSummary {
            prompts: prompts.iter().map(|(_, r)| r.len()).sum(),
            provider_texts: provider.texts.load(Ordering::SeqCst),
        };
        Ok((vectors, summary))
    }

    /// Fills the embedding cache for every configured language.
    pub fn embed(&self) -> Result<EmbedSummary, PipelineError> {
        let prompts = self.all_prompts()?;
        Ok(self.embed_all(&prompts)?.1)
    }

    fn analysis_file(&self, language: &str) -> PathBuf {
        self.config
            .analysis_dir()
            .join(format!("analysis.{language}.json"))
    }

    /// Runs the per-language analyses and writes `analysis.<lang>.json`.
    pub fn analyze(&self) -> Result<(Vec<LanguageAnalysis>, EmbedSummary), PipelineError> {
        let prompts = self.all_prompts()?;
        let (vectors, summary) = self.embed_all(&prompts)?;
        let gdp = self.catalog.gdp();
        let job_classes = self.catalog.job_classes();
        let ctx = ProbeContext {
            labels: &self.catalog.label_table,
            gdp: &gdp,
            job_classes: &job_classes,
            method: self.config.analysis.method(),
        };
        let analyses = self.pool()?.install(|| {
            prompts
                .par_iter()
                .zip(&vectors)
                .map(|((language, records), vecs)| {
                    let probe = |source| PipelineError::Probe {
                        language: language.clone(),
                        source,
                    };
                    let concepts = concept_embeddings(records, vecs).map_err(probe)?;
                    analyze_language(language, &concepts, ctx).map_err(probe)
                })
                .collect::<Result<Vec<_>, PipelineError>>()
        })?;
        for a in &analyses {
            write_json(&self.analysis_file(&a.language), a)?;
        }
        Ok((analyses, summary))
    }

    fn load_analyses(&self) -> Result<Vec<LanguageAnalysis>, PipelineError> {
        if self
            .languages()
            .iter()
            .all(|l| self.analysis_file(l).exists())
        {
            return self
                .languages()
                .iter()
                .map(|l| read_json(&self.analysis_file(l)))
                .collect();
        }
        Ok(self.analyze()?.0)
    }

    fn crosslang_file(&self) -> PathBuf {
        self.config.crosslang_dir().join("crosslang.json")
    }

    /// Compares job axes across the configured languages.
    pub fn crosslang(&self) -> Result<CrossLanguageReport, PipelineError> {
        let analyses = self.load_analyses()?;
        let per_language: Vec<(String, _)> = analyses
            .iter()
            .map(|a| (a.language.clone(), a.job.job_projection.clone()))
            .collect();
        let matrix = job_axis_matrix(&per_language, &self.catalog.job_classes())?;
        let report = CrossLanguageReport {
            second_order: second_order(
                &matrix,
                &self.catalog.lang_country,
                &self.catalog.countries,
                &self.catalog.lexsim,
            )?,
            matrix,
        };
        let dir = self.config.crosslang_dir();
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        report.write_json(&self.crosslang_file())?;
        report.write_csv(&dir.join("crosslang.csv"))?;
        Ok(report)
    }

    fn load_crosslang(&self) -> Result<CrossLanguageReport, PipelineError> {
        let path = self.crosslang_file();
        if path.exists() {
            let report: CrossLanguageReport = read_json(&path)?;
            if report.matrix.languages == self.languages() {
                return Ok(report);
            }
        }
        self.crosslang()
    }

    /// Writes the aggregate and per-language tables and the heatmap.
    pub fn report(&self) -> Result<Vec<PathBuf>, PipelineError> {
        let analyses = self.load_analyses()?;
        let rows: Vec<_> = analyses.iter().map(summarize_language).collect();
        let crosslang = self.load_crosslang()?;
        let model_id = self.config.effective_model_id();
        Ok(emit_reports(
            &self.config.report_dir(),
            &ReportInputs {
                model_id: &model_id,
                rows: &rows,
                crosslang: Some(&crosslang),
                notable_r: self.config.analysis.notable_r,
            },
        )?)
    }

    /// Every stage in order, recomputing all intermediates.
    pub fn run_all(&self) -> Result<EmbedSummary, PipelineError> {
        self.materialize()?;
        let (_, summary) = self.analyze()?;
        self.crosslang()?;
        self.report()?;
        Ok(summary)
    }

    /// Checks the corpus of every configured language and the reference
    /// data the cross-language stage needs.
    pub fn validate(&self) -> Result<ValidationOutcome, PipelineError> {
        let mut outcome = ValidationOutcome::default();
        for language in self.languages() {
            let expected = ExpectedCorpus::from_catalog(
                &self.catalog,
                std::slice::from_ref(language),
                SOURCE_LANGUAGE,
            );
            let records = self.source_prompts(language)?;
            outcome.corpus.extend(validate_corpus(&records, &expected));
        }
        let langs = self.languages();
        for (i, a) in langs.iter().enumerate() {
            match self.catalog.lang_country.get(a) {
                None => outcome
                    .config
                    .push(format!("language {a} has no entry in lang_country.csv")),
                Some(c) if self.catalog.country(c).is_none() => outcome.config.push(format!(
                    "language {a} maps to unknown or excluded country {c}"
                )),
                Some(_) => {}
            }
            for b in &langs[i + 1..] {
                if self.catalog.lexsim.get(a, b).is_none() {
                    outcome
                        .config
                        .push(format!("no lexical similarity for {a}-{b}"));
                }
            }
        }
        if self.config.provider.kind == ProviderKind::File {
            match &self.config.provider.path {
                Some(p) if !p.exists() => outcome
                    .config
                    .push(format!("provider store {} does not exist", p.display())),
                _ => {}
            }
        }
        Ok(outcome)
    }
}
