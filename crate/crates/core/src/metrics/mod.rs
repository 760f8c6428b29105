//! The seven vector distances, Mahalanobis covariance fitting, and Max-Min
//! normalization for reported values.

mod covariance;

pub use covariance::{fit_covariance, CovarianceError, CovarianceModel, DEFAULT_EPS_SCALE};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MetricId {
    /// Cosine
    CD,
    /// Euclidean
    ED,
    /// Mahalanobis
    MD,
    /// Bray-Curtis
    BD,
    /// Lance-Williams (Canberra form)
    LD,
    /// Pearson correlation
    PD,
    /// Manhattan
    MhD,
}

impl MetricId {
    pub const ALL: [MetricId; 7] = [
        MetricId::CD,
        MetricId::ED,
        MetricId::MD,
        MetricId::BD,
        MetricId::LD,
        MetricId::PD,
        MetricId::MhD,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricId::CD => "CD",
            MetricId::ED => "ED",
            MetricId::MD => "MD",
            MetricId::BD => "BD",
            MetricId::LD => "LD",
            MetricId::PD => "PD",
            MetricId::MhD => "MhD",
        }
    }

    pub fn needs_covariance(self) -> bool {
        self == MetricId::MD
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        let m = match lower.as_str() {
            "cd" | "cosine" => MetricId::CD,
            "ed" | "euclidean" => MetricId::ED,
            "md" | "mahalanobis" => MetricId::MD,
            "bd" | "braycurtis" | "bray-curtis" => MetricId::BD,
            "ld" | "lance-williams" | "canberra" => MetricId::LD,
            "pd" | "pearson" | "correlation" => MetricId::PD,
            "mhd" | "manhattan" | "cityblock" => MetricId::MhD,
            _ => return Err(format!("unknown metric {s:?}")),
        };
        Ok(m)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("degenerate input for {metric}: {reason}")]
    DegenerateInput { metric: MetricId, reason: &'static str },
    #[error("Mahalanobis distance needs a fitted covariance model")]
    MissingCovariance,
    #[error("empty input")]
    EmptyInput,
}

fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

fn cosine(u: &[f64], v: &[f64]) -> Result<f64, MetricError> {
    let nu = dot(u, u).sqrt();
    let nv = dot(v, v).sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(MetricError::DegenerateInput {
            metric: MetricId::CD,
            reason: "zero vector",
        });
    }
    Ok((1.0 - dot(u, v) / (nu * nv)).max(0.0))
}

fn euclidean(u: &[f64], v: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (a, b) in u.iter().zip(v) {
        let d = a - b;
        acc += d * d;
    }
    acc.sqrt()
}

fn manhattan(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a - b).abs()).sum()
}

fn bray_curtis(u: &[f64], v: &[f64]) -> Result<f64, MetricError> {
    let den: f64 = u.iter().zip(v).map(|(a, b)| (a + b).abs()).sum();
    if den == 0.0 {
        return Err(MetricError::DegenerateInput {
            metric: MetricId::BD,
            reason: "sum of |u+v| is zero",
        });
    }
    Ok(manhattan(u, v) / den)
}

fn lance_williams(u: &[f64], v: &[f64]) -> f64 {
    u.iter()
        .zip(v)
        .map(|(a, b)| {
            let den = a.abs() + b.abs();
            if den == 0.0 {
                0.0
            } else {
                (a - b).abs() / den
            }
        })
        .sum()
}

fn pearson(u: &[f64], v: &[f64]) -> Result<f64, MetricError> {
    let n = u.len() as f64;
    let mu = u.iter().sum::<f64>() / n;
    let mv = v.iter().sum::<f64>() / n;
    let (mut suv, mut suu, mut svv) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        let (da, db) = (a - mu, b - mv);
        suv += da * db;
        suu += da * da;
        svv += db * db;
    }
    if suu == 0.0 || svv == 0.0 {
        return Err(MetricError::DegenerateInput {
            metric: MetricId::PD,
            reason: "constant vector",
        });
    }
    Ok((1.0 - suv / (suu * svv).sqrt()).max(0.0))
}

/// Distance between two vectors. `cov` is required for [`MetricId::MD`] and
/// ignored otherwise.
pub fn distance(u: &[f64], v: &[f64], metric: MetricId, cov: Option<&CovarianceModel>) -> Result<f64, MetricError> {
    if u.len() != v.len() {
        return Err(MetricError::DimensionMismatch(u.len(), v.len()));
    }
    if u.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    match metric {
        MetricId::CD => cosine(u, v),
        MetricId::ED => Ok(euclidean(u, v)),
        MetricId::MhD => Ok(manhattan(u, v)),
        MetricId::BD => bray_curtis(u, v),
        MetricId::LD => Ok(lance_williams(u, v)),
        MetricId::PD => pearson(u, v),
        MetricId::MD => {
            let cov = cov.ok_or(MetricError::MissingCovariance)?;
            cov.mahalanobis(u, v)
        }
    }
}

/// Rescales to [0, 1] by (x - min) / (max - min). A constant list maps to
/// all zeros.
pub fn minmax_normalize(xs: &[f64]) -> Result<Vec<f64>, MetricError> {
    let (min, max) = xs
        .iter()
        .fold(None, |acc: Option<(f64, f64)>, &x| match acc {
            None => Some((x, x)),
            Some((lo, hi)) => Some((lo.min(x), hi.max(x))),
        })
        .ok_or(MetricError::EmptyInput)?;
    let span = max - min;
    Ok(xs
        .iter()
        .map(|&x| if span == 0.0 { 0.0 } else { (x - min) / span })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthogonal_cosine_is_one() {
        assert_eq!(distance(&[1.0, 0.0], &[0.0, 1.0], MetricId::CD, None), Ok(1.0));
    }

    #[test]
    fn bray_curtis_small_case() {
        let d = distance(&[1.0, 2.0], &[2.0, 1.0], MetricId::BD, None).unwrap();
        assert!((d - 2.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn perfect_correlation() {
        let d = distance(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0], MetricId::PD, None).unwrap();
        assert!(d.abs() < 1e-15);
    }

    #[test]
    fn self_distance_is_zero() {
        let v = [0.3, -1.2, 4.0, 0.0];
        let cov = CovarianceModel::identity(4);
        for m in MetricId::ALL {
            let d = distance(&v, &v, m, Some(&cov)).unwrap();
            assert!(d <= 1e-12, "{m}: {d}");
        }
    }

    #[test]
    fn lance_williams_skips_zero_terms() {
        let d = distance(&[0.0, 1.0], &[0.0, 3.0], MetricId::LD, None).unwrap();
        assert!((d - 0.5).abs() < 1e-15);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(
            distance(&[0.0, 0.0], &[1.0, 0.0], MetricId::CD, None),
            Err(MetricError::DegenerateInput { .. })
        ));
        assert!(matches!(
            distance(&[1.0, 1.0], &[1.0, 2.0], MetricId::PD, None),
            Err(MetricError::DegenerateInput { .. })
        ));
        assert!(matches!(
            distance(&[1.0, -1.0], &[-1.0, 1.0], MetricId::BD, None),
            Err(MetricError::DegenerateInput { .. })
        ));
        assert_eq!(
            distance(&[1.0], &[1.0, 2.0], MetricId::ED, None),
            Err(MetricError::DimensionMismatch(1, 2))
        );
        assert_eq!(
            distance(&[1.0], &[2.0], MetricId::MD, None),
            Err(MetricError::MissingCovariance)
        );
    }

    #[test]
    fn minmax_examples() {
        assert_eq!(minmax_normalize(&[1.0, 3.0, 5.0]).unwrap(), [0.0, 0.5, 1.0]);
        assert_eq!(minmax_normalize(&[7.0, 7.0, 7.0]).unwrap(), [0.0, 0.0, 0.0]);
        assert_eq!(minmax_normalize(&[]), Err(MetricError::EmptyInput));
    }

    #[test]
    fn metric_names_parse() {
        for m in MetricId::ALL {
            assert_eq!(m.as_str().parse::<MetricId>().unwrap(), m);
        }
        assert_eq!("canberra".parse::<MetricId>().unwrap(), MetricId::LD);
    }
}
