use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ConceptEmbedding, LabelCorrelation, ProbeError};
use crate::corpus::{LabelTable, SetKind, Side};
use crate::numerics::{correlate, fit_first_pc, project, CorrelationMethod, PrincipalDirection};

/// Sign applied to the fitted direction before reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    AsFitted,
    Flipped,
}

/// How a set of country scores lines up with the labels and with GDP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisInterpretation {
    /// Ascending by `r`; labels constant across the countries are absent.
    pub label_correlations: Vec<LabelCorrelation>,
    pub top_negative: Option<LabelCorrelation>,
    pub top_positive: Option<LabelCorrelation>,
    pub east_west: bool,
    pub gdp_r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionAnalysis {
    pub language: String,
    pub set_kind: SetKind,
    pub direction: PrincipalDirection,
    pub orientation: Orientation,
    pub countries: Vec<String>,
    pub projections: Vec<f64>,
    #[serde(flatten)]
    pub interpretation: AxisInterpretation,
}

/// Reads `projections` (aligned with `countries`) against every label and
/// against GDP.
pub fn interpret_axis(
    countries: &[String],
    projections: &[f64],
    labels: &LabelTable,
    gdp: &BTreeMap<String, f64>,
    method: CorrelationMethod,
) -> Result<AxisInterpretation, ProbeError> {
    if let Some(c) = countries.iter().find(|c| labels.country_index(c).is_none()) {
        return Err(ProbeError::UnknownCountry(c.clone()));
    }
    let gdp_values = countries
        .iter()
        .map(|c| {
            gdp.get(c)
                .copied()
                .ok_or_else(|| ProbeError::MissingGdp(c.clone()))
        })
        .collect::<Result<Vec<f64>, _>>()?;
    let gdp_r = correlate(method, projections, &gdp_values)?;

    let mut label_correlations = Vec::new();
    for label in &labels.labels {
        let indicator = labels
            .indicator(label, countries)
            .expect("countries checked against the label table");
        match correlate(method, projections, &indicator) {
            Ok(r) => label_correlations.push(LabelCorrelation {
                label: label.clone(),
                r,
                side: labels.side(label),
            }),
            Err(e) if e.is_undefined_correlation() => {}
            Err(e) => return Err(e.into()),
        }
    }
    label_correlations.sort_by(|a, b| a.r.total_cmp(&b.r).then_with(|| a.label.cmp(&b.label)));

    let top_negative = label_correlations.first().cloned();
    let top_positive = label_correlations.last().cloned();
    let east_west = match (&top_negative, &top_positive) {
        (Some(n), Some(p)) => matches!(
            (n.side, p.side),
            (Side::East, Side::West) | (Side::West, Side::East)
        ),
        _ => false,
    };
    Ok(AxisInterpretation {
        label_correlations,
        top_negative,
        top_positive,
        east_west,
        gdp_r,
    })
}

/// Fits the first principal direction over country concepts and interprets
/// it. The direction is flipped when needed so that `gdp_r >= 0`.
pub fn analyze_dominant_dimension(
    language: &str,
    set_kind: SetKind,
    concepts: &[ConceptEmbedding],
    labels: &LabelTable,
    gdp: &BTreeMap<String, f64>,
    method: CorrelationMethod,
) -> Result<DimensionAnalysis, ProbeError> {
    if concepts.len() < 3 {
        return Err(ProbeError::TooFewEntities {
            required: 3,
            found: concepts.len(),
        });
    }
    let countries: Vec<String> = concepts.iter().map(|c| c.entity_id.clone()).collect();
    let rows: Vec<Vec<f64>> = concepts.iter().map(|c| c.vector.clone()).collect();
    let fitted = fit_first_pc(&rows)?;
    let mut projections = project(&rows, &fitted)?;
    let mut interpretation = interpret_axis(&countries, &projections, labels, gdp, method)?;

    let (direction, orientation) = if interpretation.gdp_r < 0.0 {
        projections.iter_mut().for_each(|p| *p = -*p);
        interpretation = interpret_axis(&countries, &projections, labels, gdp, method)?;
        (fitted.flipped(), Orientation::Flipped)
    } else {
        (fitted, Orientation::AsFitted)
    };

    Ok(DimensionAnalysis {
        language: language.to_string(),
        set_kind,
        direction,
        orientation,
        countries,
        projections,
        interpretation,
    })
}
