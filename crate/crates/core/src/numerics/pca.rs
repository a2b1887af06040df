use serde::{Deserialize, Serialize};

use super::eigen::SymmetricEigen;
use super::{dot, norm, NumericsError};

/// Upper bound on the number of components [`fit_components`] will return.
pub const MAX_COMPONENTS: usize = 3;

/// A fitted principal axis: the centering mean, the unit direction and the
/// share of total variance it captures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrincipalDirection {
    pub mean: Vec<f64>,
    pub direction: Vec<f64>,
    pub explained_variance_ratio: f64,
    pub eigenvalue: f64,
}

impl PrincipalDirection {
    pub fn dim(&self) -> usize {
        self.direction.len()
    }

    /// Same axis with the direction negated.
    pub fn flipped(&self) -> Self {
        Self {
            direction: self.direction.iter().map(|x| -x).collect(),
            ..self.clone()
        }
    }
}

/// Fits the first principal component of `rows` (n x d, n >= 2).
///
/// The direction is the unit eigenvector of the sample covariance
/// (denominator `n - 1`) with the largest eigenvalue. Its sign is fixed so
/// that the entry of largest magnitude is positive, ties going to the lowest
/// index.
pub fn fit_first_pc(rows: &[Vec<f64>]) -> Result<PrincipalDirection, NumericsError> {
    let mut comps = fit_components(rows, 1)?;
    Ok(comps.remove(0))
}

/// Fits the leading `k` principal components (`1 <= k <= MAX_COMPONENTS`).
pub fn fit_components(
    rows: &[Vec<f64>],
    k: usize,
) -> Result<Vec<PrincipalDirection>, NumericsError> {
    let (n, d) = check_rows(rows)?;
    if k == 0 || k > MAX_COMPONENTS || k > d.min(n - 1) {
        return Err(NumericsError::InvalidComponentCount {
            requested: k,
            max: MAX_COMPONENTS.min(d).min(n - 1),
        });
    }
    if rows.iter().all(|r| r == &rows[0]) {
        return Err(NumericsError::DegenerateCloud);
    }

    let mean = column_mean(rows, d);
    let centered: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| r.iter().zip(&mean).map(|(x, m)| x - m).collect())
        .collect();
    let denom = (n - 1) as f64;
    let total_variance: f64 = centered
        .iter()
        .map(|r| r.iter().map(|x| x * x).sum::<f64>())
        .sum::<f64>()
        / denom;
    if total_variance.is_nan() || total_variance <= 0.0 {
        return Err(NumericsError::DegenerateCloud);
    }

    // With n < d, decompose the n x n Gram matrix; its nonzero spectrum
    // equals the covariance spectrum.
    let use_gram = n < d;
    let (eig, size) = if use_gram {
        let mut gram = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = dot(&centered[i], &centered[j]) / denom;
                gram[i * n + j] = v;
                gram[j * n + i] = v;
            }
        }
        (SymmetricEigen::new(&gram, n)?, n)
    } else {
        let mut cov = vec![0.0; d * d];
        for row in &centered {
            for a in 0..d {
                let ra = row[a];
                if ra == 0.0 {
                    continue;
                }
                for b in 0..=a {
                    cov[a * d + b] += ra * row[b];
                }
            }
        }
        for a in 0..d {
            for b in 0..=a {
                let v = cov[a * d + b] / denom;
                cov[a * d + b] = v;
                cov[b * d + a] = v;
            }
        }
        (SymmetricEigen::new(&cov, d)?, d)
    };

    let mut out = Vec::with_capacity(k);
    for c in 0..k {
        let j = size - 1 - c;
        let eigenvalue = eig.eigenvalues[j].max(0.0);
        if eigenvalue <= 0.0 {
            return Err(if c == 0 {
                NumericsError::DegenerateCloud
            } else {
                NumericsError::InvalidComponentCount {
                    requested: k,
                    max: c,
                }
            });
        }
        let mut direction = if use_gram {
            let v = eig.vector(j);
            let mut dir = vec![0.0; d];
            for (row, &w) in centered.iter().zip(&v) {
                for (acc, x) in dir.iter_mut().zip(row) {
                    *acc += w * x;
                }
            }
            let len = norm(&dir);
            dir.iter_mut().for_each(|x| *x /= len);
            dir
        } else {
            let mut dir = eig.vector(j);
            let len = norm(&dir);
            dir.iter_mut().for_each(|x| *x /= len);
            dir
        };
        canonicalize_sign(&mut direction);
        out.push(PrincipalDirection {
            mean: mean.clone(),
            direction,
            explained_variance_ratio: (eigenvalue / total_variance).clamp(0.0, 1.0),
            eigenvalue,
        });
    }
    Ok(out)
}

/// Scores of each row along `pd`: `<row - mean, direction>`.
pub fn project(rows: &[Vec<f64>], pd: &PrincipalDirection) -> Result<Vec<f64>, NumericsError> {
    let d = pd.dim();
    rows.iter()
        .map(|row| {
            if row.len() != d {
                return Err(NumericsError::DimensionMismatch {
                    expected: d,
                    found: row.len(),
                });
            }
            Ok(row
                .iter()
                .zip(&pd.mean)
                .zip(&pd.direction)
                .map(|((x, m), u)| (x - m) * u)
                .sum())
        })
        .collect()
}

fn check_rows(rows: &[Vec<f64>]) -> Result<(usize, usize), NumericsError> {
    let n = rows.len();
    if n < 2 {
        return Err(NumericsError::TooFewRows {
            required: 2,
            found: n,
        });
    }
    let d = rows[0].len();
    if d == 0 {
        return Err(NumericsError::EmptyDimension);
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != d {
            return Err(NumericsError::RaggedRows {
                row: i,
                expected: d,
                found: row.len(),
            });
        }
        if row.iter().any(|x| !x.is_finite()) {
            return Err(NumericsError::NonFinite);
        }
    }
    Ok((n, d))
}

fn column_mean(rows: &[Vec<f64>], d: usize) -> Vec<f64> {
    let mut mean = vec![0.0; d];
    for row in rows {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    let n = rows.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    mean
}

/// Largest-magnitude entry positive; entries within a relative 1e-12 of the
/// maximum count as ties and the lowest index wins.
fn canonicalize_sign(direction: &mut [f64]) {
    let max_abs = direction.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
    let tol = max_abs * 1e-12;
    if let Some(pivot) = direction.iter().find(|x| x.abs() >= max_abs - tol) {
        if *pivot < 0.0 {
            direction.iter_mut().for_each(|x| *x = -*x);
        }
    }
}
