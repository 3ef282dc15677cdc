//! Reduction of an m-variate sample to its squared sample Mahalanobis
//! distances `(y_i - ȳ)ᵀ S⁻¹ (y_i - ȳ)`.
//!
//! `S` uses the `n - 1` divisor. Distances are obtained from a Cholesky
//! solve, never from an explicit inverse; a covariance that does not factor
//! is reported as [`MahalanobisError::SingularCovariance`].

use thiserror::Error;

use crate::linalg::Cholesky;

/// Pivot ratio of the covariance factorization above which the reduction is
/// flagged as ill-conditioned.
pub const ILL_CONDITIONED_RATIO: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DataError {
    #[error("need at least 2 observations, got {0}")]
    TooFewRows(usize),
    #[error("need at least one variable")]
    NoColumns,
    #[error("expected {expected} values for the declared shape, got {actual}")]
    Shape { expected: usize, actual: usize },
    #[error("row {row} has {actual} values, expected {expected}")]
    Ragged { row: usize, expected: usize, actual: usize },
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("squared distances must be finite and nonnegative (index {0})")]
    InvalidDistance(usize),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MahalanobisError {
    #[error("sample covariance is singular (n = {n}, m = {m}); the test cannot proceed")]
    SingularCovariance { n: usize, m: usize },
}

/// `n` observations of `m` variables, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    n: usize,
    m: usize,
    values: Vec<f64>,
}

impl DataMatrix {
    pub fn new(n: usize, m: usize, values: Vec<f64>) -> Result<Self, DataError> {
        if n < 2 {
            return Err(DataError::TooFewRows(n));
        }
        if m == 0 {
            return Err(DataError::NoColumns);
        }
        if values.len() != n * m {
            return Err(DataError::Shape {
                expected: n * m,
                actual: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(DataError::NonFinite { row: i / m, col: i % m });
        }
        Ok(Self { n, m, values })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, DataError> {
        let m = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * m);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != m {
                return Err(DataError::Ragged {
                    row: i,
                    expected: m,
                    actual: r.len(),
                });
            }
            values.extend_from_slice(r);
        }
        Self::new(rows.len(), m, values)
    }

    pub fn nrows(&self) -> usize {
        self.n
    }

    pub fn ncols(&self) -> usize {
        self.m
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.m..(i + 1) * self.m]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.m)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// Squared Mahalanobis distances, one per observation.
#[derive(Debug, Clone, PartialEq)]
pub struct SquaredDistances(Vec<f64>);

impl SquaredDistances {
    pub fn new(values: Vec<f64>) -> Result<Self, DataError> {
        if values.is_empty() {
            return Err(DataError::TooFewRows(0));
        }
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(DataError::InvalidDistance(i));
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// Distances together with the conditioning of the covariance factor.
#[derive(Debug, Clone)]
pub struct Reduction {
    pub distances: SquaredDistances,
    /// Largest over smallest Cholesky pivot of `S`.
    pub pivot_ratio: f64,
}

impl Reduction {
    pub fn ill_conditioned(&self) -> bool {
        self.pivot_ratio > ILL_CONDITIONED_RATIO
    }
}

pub fn sample_mean(data: &DataMatrix) -> Vec<f64> {
    let mut mean = vec![0.0; data.m];
    for row in data.rows() {
        for (acc, v) in mean.iter_mut().zip(row) {
            *acc += v;
        }
    }
    let n = data.n as f64;
    mean.iter_mut().for_each(|v| *v /= n);
    mean
}

/// Unbiased sample covariance, row-major `m × m`.
pub fn sample_covariance(data: &DataMatrix) -> Vec<f64> {
    let m = data.m;
    let mean = sample_mean(data);
    let mut cov = vec![0.0; m * m];
    let mut centered = vec![0.0; m];
    for row in data.rows() {
        for j in 0..m {
            centered[j] = row[j] - mean[j];
        }
        for i in 0..m {
            for j in 0..=i {
                cov[i * m + j] += centered[i] * centered[j];
            }
        }
    }
    let denom = (data.n - 1) as f64;
    for i in 0..m {
        for j in 0..=i {
            let v = cov[i * m + j] / denom;
            cov[i * m + j] = v;
            cov[j * m + i] = v;
        }
    }
    cov
}

pub fn mahalanobis_reduction(data: &DataMatrix) -> Result<Reduction, MahalanobisError> {
    let (n, m) = (data.n, data.m);
    let singular = MahalanobisError::SingularCovariance { n, m };
    if n <= m {
        return Err(singular);
    }
    let cov = sample_covariance(data);
    let chol = Cholesky::factor(&cov, m).ok_or(singular)?;
    let mean = sample_mean(data);
    let mut z = vec![0.0; m];
    let distances = data
        .rows()
        .map(|row| {
            for j in 0..m {
                z[j] = row[j] - mean[j];
            }
            chol.solve_lower_in_place(&mut z);
            z.iter().map(|v| v * v).sum::<f64>()
        })
        .collect();
    Ok(Reduction {
        distances: SquaredDistances(distances),
        pivot_ratio: chol.pivot_ratio(),
    })
}

pub fn squared_mahalanobis(data: &DataMatrix) -> Result<SquaredDistances, MahalanobisError> {
    mahalanobis_reduction(data).map(|r| r.distances)
}
