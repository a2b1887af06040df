use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::dimension::{interpret_axis, AxisInterpretation, Orientation};
use super::{ConceptEmbedding, ProbeError};
use crate::corpus::{LabelTable, PrestigeClass};
use crate::numerics::{fit_first_pc, mean, project, CorrelationMethod, PrincipalDirection};

/// Job-prestige axis and its reading on country-prestige concepts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobAxisResult {
    pub language: String,
    /// Oriented so that high-prestige jobs score higher on average.
    pub direction: PrincipalDirection,
    pub orientation: Orientation,
    pub accuracy: f64,
    pub job_projection: BTreeMap<String, f64>,
    /// Country-prestige concepts scored with the job axis, not refitted.
    pub country_projection: BTreeMap<String, f64>,
    pub country: AxisInterpretation,
}

impl JobAxisResult {
    pub fn country_gdp_r(&self) -> f64 {
        self.country.gdp_r
    }

    pub fn country_east_west(&self) -> bool {
        self.country.east_west
    }
}

/// Share of jobs on the side of zero that matches their class, under the
/// better of the two sign assignments. A score of exactly zero counts half.
pub fn job_accuracy(projections: &[f64], classes: &[PrestigeClass]) -> f64 {
    assert_eq!(projections.len(), classes.len());
    let n = projections.len() as f64;
    let high_positive: f64 = projections
        .iter()
        .zip(classes)
        .map(|(&p, c)| match (p.partial_cmp(&0.0), c) {
            (Some(std::cmp::Ordering::Equal), _) => 0.5,
            (Some(std::cmp::Ordering::Greater), PrestigeClass::High)
            | (Some(std::cmp::Ordering::Less), PrestigeClass::Low) => 1.0,
            _ => 0.0,
        })
        .sum();
    high_positive.max(n - high_positive) / n
}

/// Fits the first principal direction over job concepts, orients it towards
/// high prestige and scores country-prestige concepts with the same mean and
/// direction.
pub fn fit_job_axis(
    language: &str,
    job_concepts: &[ConceptEmbedding],
    country_concepts: &[ConceptEmbedding],
    job_classes: &BTreeMap<String, PrestigeClass>,
    labels: &LabelTable,
    gdp: &BTreeMap<String, f64>,
    method: CorrelationMethod,
) -> Result<JobAxisResult, ProbeError> {
    let classes = job_concepts
        .iter()
        .map(|c| {
            job_classes
                .get(&c.entity_id)
                .copied()
                .ok_or_else(|| ProbeError::MissingClass(c.entity_id.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let Some(&first) = classes.first() else {
        return Err(ProbeError::TooFewEntities {
            required: 2,
            found: 0,
        });
    };
    if classes.iter().all(|&c| c == first) {
        return Err(ProbeError::SingleClass(first));
    }
    if country_concepts.len() < 3 {
        return Err(ProbeError::TooFewEntities {
            required: 3,
            found: country_concepts.len(),
        });
    }

    let rows: Vec<Vec<f64>> = job_concepts.iter().map(|c| c.vector.clone()).collect();
    let fitted = fit_first_pc(&rows)?;
    let mut job_scores = project(&rows, &fitted)?;
    let class_mean = |scores: &[f64], class: PrestigeClass| {
        let picked: Vec<f64> = scores
            .iter()
            .zip(&classes)
            .filter(|(_, &c)| c == class)
            .map(|(&s, _)| s)
            .collect();
        mean(&picked)
    };
    let (direction, orientation) = if class_mean(&job_scores, PrestigeClass::High)
        < class_mean(&job_scores, PrestigeClass::Low)
    {
        job_scores.iter_mut().for_each(|s| *s = -*s);
        (fitted.flipped(), Orientation::Flipped)
    } else {
        (fitted, Orientation::AsFitted)
    };
    let accuracy = job_accuracy(&job_scores, &classes);

    let country_rows: Vec<Vec<f64>> = country_concepts.iter().map(|c| c.vector.clone()).collect();
    let country_scores = project(&country_rows, &direction)?;
    let country_ids: Vec<String> = country_concepts
        .iter()
        .map(|c| c.entity_id.clone())
        .collect();
    let country = interpret_axis(&country_ids, &country_scores, labels, gdp, method)?;

    Ok(JobAxisResult {
        language: language.to_string(),
        direction,
        orientation,
        accuracy,
        job_projection: job_concepts
            .iter()
            .map(|c| c.entity_id.clone())
            .zip(job_scores)
            .collect(),
        country_projection: country_ids.into_iter().zip(country_scores).collect(),
        country,
    })
}
