//! Deterministic linear algebra and statistics used by the analyses.
//!
//! Everything here is pure and reentrant: principal directions, projections,
//! correlation coefficients and great-circle distances.

mod eigen;
mod geo;
mod pca;
mod stats;

pub use eigen::SymmetricEigen;
pub use geo::{haversine_km, Coordinate, EARTH_RADIUS_KM};
pub use pca::{fit_components, fit_first_pc, project, PrincipalDirection, MAX_COMPONENTS};
pub use stats::{correlate, mean, pearson, ranks, spearman, CorrelationMethod};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("need at least {required} rows, got {found}")]
    TooFewRows { required: usize, found: usize },
    #[error("rows must have at least one column")]
    EmptyDimension,
    #[error("row {row} has {found} columns, expected {expected}")]
    RaggedRows {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("non-finite value in input")]
    NonFinite,
    #[error("degenerate cloud: all rows are identical")]
    DegenerateCloud,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("series lengths differ ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("undefined correlation: need at least 3 observations, got {n}")]
    TooFewObservations { n: usize },
    #[error("undefined correlation: zero-variance input")]
    UndefinedCorrelation,
    #[error("coordinate out of range: lat {lat}, lon {lon}")]
    CoordinateOutOfRange { lat: f64, lon: f64 },
    #[error("component count must be in 1..={max}, got {requested}")]
    InvalidComponentCount { requested: usize, max: usize },
    #[error("eigensolver did not converge")]
    NoConvergence,
}

impl NumericsError {
    /// True for the "correlation is not defined" family of errors.
    pub fn is_undefined_correlation(&self) -> bool {
        matches!(
            self,
            NumericsError::UndefinedCorrelation | NumericsError::TooFewObservations { .. }
        )
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
