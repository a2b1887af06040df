use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::dimension::{analyze_dominant_dimension, AxisInterpretation, DimensionAnalysis};
use super::job::{fit_job_axis, JobAxisResult};
use super::{ConceptEmbedding, LabelCorrelation, ProbeError};
use crate::corpus::{LabelTable, PrestigeClass, SetKind};
use crate::numerics::CorrelationMethod;

/// Reference data shared by every language's analysis.
#[derive(Debug, Clone, Copy)]
pub struct ProbeContext<'a> {
    pub labels: &'a LabelTable,
    pub gdp: &'a BTreeMap<String, f64>,
    pub job_classes: &'a BTreeMap<String, PrestigeClass>,
    pub method: CorrelationMethod,
}

/// All analyses for one language.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageAnalysis {
    pub language: String,
    pub country_origin: DimensionAnalysis,
    pub country_prestige: DimensionAnalysis,
    pub job: JobAxisResult,
}

/// Extremes, east-west flag and GDP correlation of one axis reading.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetSummary {
    pub top_negative: Option<LabelCorrelation>,
    pub top_positive: Option<LabelCorrelation>,
    pub east_west: bool,
    pub gdp_r: f64,
}

impl From<&AxisInterpretation> for SetSummary {
    fn from(i: &AxisInterpretation) -> Self {
        Self {
            top_negative: i.top_negative.clone(),
            top_positive: i.top_positive.clone(),
            east_west: i.east_west,
            gdp_r: i.gdp_r,
        }
    }
}

/// One row of the per-language report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageRow {
    pub language: String,
    pub country_origin: SetSummary,
    pub country_prestige: SetSummary,
    pub job_accuracy: f64,
    pub job_on_countries: SetSummary,
}

fn pick(
    concepts: &[ConceptEmbedding],
    language: &str,
    set_kind: SetKind,
) -> Result<Vec<ConceptEmbedding>, ProbeError> {
    let picked: Vec<ConceptEmbedding> = concepts
        .iter()
        .filter(|c| c.language == language && c.set_kind == set_kind)
        .cloned()
        .collect();
    if picked.is_empty() {
        return Err(ProbeError::MissingSet {
            language: language.to_string(),
            set_kind,
        });
    }
    Ok(picked)
}

/// Runs the origin, prestige and job analyses for `language`.
pub fn analyze_language(
    language: &str,
    concepts: &[ConceptEmbedding],
    ctx: ProbeContext<'_>,
) -> Result<LanguageAnalysis, ProbeError> {
    let origin = pick(concepts, language, SetKind::CountryOrigin)?;
    let prestige = pick(concepts, language, SetKind::CountryPrestige)?;
    let jobs = pick(concepts, language, SetKind::JobPrestige)?;
    Ok(LanguageAnalysis {
        language: language.to_string(),
        country_origin: analyze_dominant_dimension(
            language,
            SetKind::CountryOrigin,
            &origin,
            ctx.labels,
            ctx.gdp,
            ctx.method,
        )?,
        country_prestige: analyze_dominant_dimension(
            language,
            SetKind::CountryPrestige,
            &prestige,
            ctx.labels,
            ctx.gdp,
            ctx.method,
        )?,
        job: fit_job_axis(
            language,
            &jobs,
            &prestige,
            ctx.job_classes,
            ctx.labels,
            ctx.gdp,
            ctx.method,
        )?,
    })
}

pub fn summarize_language(analysis: &LanguageAnalysis) -> LanguageRow {
    LanguageRow {
        language: analysis.language.clone(),
        country_origin: (&analysis.country_origin.interpretation).into(),
        country_prestige: (&analysis.country_prestige.interpretation).into(),
        job_accuracy: analysis.job.accuracy,
        job_on_countries: (&analysis.job.country).into(),
    }
}
