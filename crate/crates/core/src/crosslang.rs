//! Agreement of job-prestige axes across languages, and what explains it.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CountryRecord, LexicalSimilarityTable, PrestigeClass};
use crate::numerics::{haversine_km, mean, pearson, NumericsError};

#[derive(Debug, Error)]
pub enum CrossLangError {
    #[error("no languages given")]
    NoLanguages,
    #[error("language {0} listed twice")]
    DuplicateLanguage(String),
    #[error("job set of language {language} differs from {reference}")]
    JobSetMismatch { language: String, reference: String },
    #[error("job {0} has no prestige class")]
    MissingClass(String),
    #[error("language {0} has no mapped country")]
    MissingMapping(String),
    #[error("language {language} maps to unknown country {country}")]
    UnknownCountry { language: String, country: String },
    #[error("no lexical similarity for {0}-{1}")]
    MissingLexsim(String, String),
    #[error("correlating {a} with {b}: {source}")]
    Correlation {
        a: String,
        b: String,
        #[source]
        source: NumericsError,
    },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Pairwise correlations of per-language job scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossLanguageMatrix {
    pub languages: Vec<String>,
    pub jobs: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl CrossLanguageMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.languages.iter().position(|l| l == a)?;
        let j = self.languages.iter().position(|l| l == b)?;
        Some(self.values[i][j])
    }

    /// Restriction to `languages`, in the given order.
    pub fn submatrix(&self, languages: &[String]) -> Option<Self> {
        let idx = languages
            .iter()
            .map(|l| self.languages.iter().position(|x| x == l))
            .collect::<Option<Vec<_>>>()?;
        Some(Self {
            languages: languages.to_vec(),
            jobs: self.jobs.clone(),
            values: idx
                .iter()
                .map(|&i| idx.iter().map(|&j| self.values[i][j]).collect())
                .collect(),
        })
    }
}

/// Builds the matrix from each language's job scores. Each score vector is
/// first negated if needed so that high-prestige jobs average above
/// low-prestige ones.
pub fn job_axis_matrix(
    per_language: &[(String, BTreeMap<String, f64>)],
    job_classes: &BTreeMap<String, PrestigeClass>,
) -> Result<CrossLanguageMatrix, CrossLangError> {
    let Some((reference, first)) = per_language.first() else {
        return Err(CrossLangError::NoLanguages);
    };
    let jobs: Vec<String> = first.keys().cloned().collect();
    let classes = jobs
        .iter()
        .map(|j| {
            job_classes
                .get(j)
                .copied()
                .ok_or_else(|| CrossLangError::MissingClass(j.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut seen = std::collections::BTreeSet::new();
    let mut aligned: Vec<Vec<f64>> = Vec::with_capacity(per_language.len());
    for (language, scores) in per_language {
        if !seen.insert(language.as_str()) {
            return Err(CrossLangError::DuplicateLanguage(language.clone()));
        }
        if scores.len() != jobs.len() || !jobs.iter().all(|j| scores.contains_key(j)) {
            return Err(CrossLangError::JobSetMismatch {
                language: language.clone(),
                reference: reference.clone(),
            });
        }
        let v: Vec<f64> = jobs.iter().map(|j| scores[j]).collect();
        let class_mean = |c: PrestigeClass| {
            let xs: Vec<f64> = v
                .iter()
                .zip(&classes)
                .filter(|(_, k)| **k == c)
                .map(|(x, _)| *x)
                .collect();
            mean(&xs)
        };
        aligned.push(
            if class_mean(PrestigeClass::High) < class_mean(PrestigeClass::Low) {
                v.iter().map(|x| -x).collect()
            } else {
                v
            },
        );
    }

    let l = per_language.len();
    let mut values = vec![vec![1.0; l]; l];
    for i in 0..l {
        for j in (i + 1)..l {
            let r = pearson(&aligned[i], &aligned[j]).map_err(|source| {
                CrossLangError::Correlation {
                    a: per_language[i].0.clone(),
                    b: per_language[j].0.clone(),
                    source,
                }
            })?;
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    Ok(CrossLanguageMatrix {
        languages: per_language.iter().map(|(l, _)| l.clone()).collect(),
        jobs,
        values,
    })
}

/// One second-order coefficient, or why it could not be computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Component {
    Defined { r: f64 },
    Undefined { reason: String },
}

impl Component {
    pub fn value(&self) -> Option<f64> {
        match self {
            Component::Defined { r } => Some(*r),
            Component::Undefined { .. } => None,
        }
    }

    fn absolute(x: &[f64], y: &[f64]) -> Self {
        match pearson(x, y) {
            Ok(r) => Component::Defined { r: r.abs() },
            Err(e) => Component::Undefined {
                reason: e.to_string(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairObservation {
    pub language_a: String,
    pub language_b: String,
    pub r: f64,
    pub distance_km: f64,
    pub gdp_diff: f64,
    pub lexsim: f64,
}

/// Absolute correlations of pairwise agreement with distance, GDP gap and
/// lexical similarity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondOrderResult {
    pub n_pairs: usize,
    pub geo_r: Component,
    pub gdp_diff_r: Component,
    pub lexsim_r: Component,
    pub pairs: Vec<PairObservation>,
}

pub fn second_order(
    matrix: &CrossLanguageMatrix,
    lang_country: &BTreeMap<String, String>,
    countries: &[CountryRecord],
    lexsim: &LexicalSimilarityTable,
) -> Result<SecondOrderResult, CrossLangError> {
    let country_of = |lang: &String| -> Result<&CountryRecord, CrossLangError> {
        let id = lang_country
            .get(lang)
            .ok_or_else(|| CrossLangError::MissingMapping(lang.clone()))?;
        countries
            .iter()
            .find(|c| &c.id == id)
            .ok_or_else(|| CrossLangError::UnknownCountry {
                language: lang.clone(),
                country: id.clone(),
            })
    };
    let mapped = matrix
        .languages
        .iter()
        .map(country_of)
        .collect::<Result<Vec<_>, _>>()?;

    let mut pairs = Vec::new();
    let l = matrix.languages.len();
    for i in 0..l {
        for j in (i + 1)..l {
            let (a, b) = (&matrix.languages[i], &matrix.languages[j]);
            let lexsim = lexsim
                .get(a, b)
                .ok_or_else(|| CrossLangError::MissingLexsim(a.clone(), b.clone()))?;
            pairs.push(PairObservation {
                language_a: a.clone(),
                language_b: b.clone(),
                r: matrix.values[i][j],
                distance_km: haversine_km(mapped[i].coordinate, mapped[j].coordinate)?,
                gdp_diff: (mapped[i].gdp_ppp_2019 - mapped[j].gdp_ppp_2019).abs(),
                lexsim,
            });
        }
    }

    let column = |f: fn(&PairObservation) -> f64| pairs.iter().map(f).collect::<Vec<f64>>();
    let rs = column(|p| p.r);
    Ok(SecondOrderResult {
        n_pairs: pairs.len(),
        geo_r: Component::absolute(&rs, &column(|p| p.distance_km)),
        gdp_diff_r: Component::absolute(&rs, &column(|p| p.gdp_diff)),
        lexsim_r: Component::absolute(&rs, &column(|p| p.lexsim)),
        pairs,
    })
}

/// Matrix and second-order result as written to `crosslang.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossLanguageReport {
    pub matrix: CrossLanguageMatrix,
    pub second_order: SecondOrderResult,
}

impl CrossLanguageReport {
    pub fn write_json(&self, path: &Path) -> Result<(), CrossLangError> {
        let text = serde_json::to_string_pretty(self).expect("report serializes") + "\n";
        fs::write(path, text).map_err(|source| CrossLangError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Long format, one line per unordered language pair.
    pub fn write_csv(&self, path: &Path) -> Result<(), CrossLangError> {
        let io = |source| CrossLangError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut out = Vec::new();
        writeln!(out, "language_a,language_b,r,distance_km,gdp_diff,lexsim").map_err(io)?;
        for p in &self.second_order.pairs {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                p.language_a, p.language_b, p.r, p.distance_km, p.gdp_diff, p.lexsim
            )
            .map_err(io)?;
        }
        fs::write(path, out).map_err(io)
    }
}
