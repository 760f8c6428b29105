use nalgebra::DMatrix;
use thiserror::Error;

use super::MetricError;

pub const DEFAULT_EPS_SCALE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CovarianceError {
    #[error("need at least 2 vectors to fit a covariance, got {0}")]
    TooFewSamples(usize),
    #[error("vector {index} has dimension {found}, expected {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("covariance is not positive definite after regularization")]
    SingularAfterRegularization,
}

/// Regularized inverse covariance for Mahalanobis distances.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceModel {
    pub mean: Vec<f64>,
    /// Row-major d x d inverse covariance.
    inverse: Vec<f64>,
    pub epsilon: f64,
    pub samples: usize,
}

impl CovarianceModel {
    /// VI = I; Mahalanobis then reduces to Euclidean.
    pub fn identity(dim: usize) -> Self {
        let mut inverse = vec![0.0; dim * dim];
        for i in 0..dim {
            inverse[i * dim + i] = 1.0;
        }
        CovarianceModel {
            mean: vec![0.0; dim],
            inverse,
            epsilon: 0.0,
            samples: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn inverse_at(&self, row: usize, col: usize) -> f64 {
        self.inverse[row * self.dim() + col]
    }

    pub fn mahalanobis(&self, u: &[f64], v: &[f64]) -> Result<f64, MetricError> {
        let d = self.dim();
        if u.len() != d {
            return Err(MetricError::DimensionMismatch(u.len(), d));
        }
        let diff: Vec<f64> = u.iter().zip(v).map(|(a, b)| a - b).collect();
        let mut acc = 0.0;
        for (i, di) in diff.iter().enumerate() {
            let row = &self.inverse[i * d..(i + 1) * d];
            let mut r = 0.0;
            for (vij, dj) in row.iter().zip(&diff) {
                r += vij * dj;
            }
            acc += di * r;
        }
        Ok(acc.max(0.0).sqrt())
    }
}

/// Sample covariance (n - 1 denominator) plus eps * I, inverted through a
/// Cholesky factorization. eps = eps_scale * trace / d; when the trace is
/// zero eps falls back to eps_scale itself.
pub fn fit_covariance<V: AsRef<[f64]>>(vectors: &[V], eps_scale: f64) -> Result<CovarianceModel, CovarianceError> {
    let n = vectors.len();
    if n < 2 {
        return Err(CovarianceError::TooFewSamples(n));
    }
    let d = vectors[0].as_ref().len();
    for (index, v) in vectors.iter().enumerate() {
        if v.as_ref().len() != d {
            return Err(CovarianceError::DimensionMismatch {
                index,
                expected: d,
                found: v.as_ref().len(),
            });
        }
    }

    let mut mean = vec![0.0; d];
    for v in vectors {
        for (m, x) in mean.iter_mut().zip(v.as_ref()) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);

    let mut cov = DMatrix::<f64>::zeros(d, d);
    let mut centered = vec![0.0; d];
    for v in vectors {
        for ((c, x), m) in centered.iter_mut().zip(v.as_ref()).zip(&mean) {
            *c = x - m;
        }
        for i in 0..d {
            for j in i..d {
                cov[(i, j)] += centered[i] * centered[j];
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            let c = cov[(i, j)] / (n - 1) as f64;
            cov[(i, j)] = c;
            cov[(j, i)] = c;
        }
    }

    let trace = cov.trace();
    let epsilon = if trace > 0.0 {
        eps_scale * trace / d as f64
    } else {
        eps_scale
    };
    for i in 0..d {
        cov[(i, i)] += epsilon;
    }

    let chol = cov.cholesky().ok_or(CovarianceError::SingularAfterRegularization)?;
    let inv = chol.inverse();
    let mut inverse = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            inverse[i * d + j] = 0.5 * (inv[(i, j)] + inv[(j, i)]);
        }
    }
    if inverse.iter().any(|x| !x.is_finite()) {
        return Err(CovarianceError::SingularAfterRegularization);
    }
    Ok(CovarianceModel {
        mean,
        inverse,
        epsilon,
        samples: n,
    })
}
