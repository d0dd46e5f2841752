//! Moment estimation: sample mean and covariance.

use std::fmt;
use std::str::FromStr;

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, MatRef, Par};
use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingSet;
use crate::error::{MetricsError, Result};
use crate::linalg::Matrix;

/// Covariance normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Divisor {
    /// Divide by `n - 1`.
    #[default]
    Unbiased,
    /// Divide by `n`.
    Biased,
}

impl fmt::Display for Divisor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Divisor::Unbiased => "unbiased",
            Divisor::Biased => "biased",
        })
    }
}

impl FromStr for Divisor {
    type Err = MetricsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unbiased" => Ok(Divisor::Unbiased),
            "biased" => Ok(Divisor::Biased),
            other => Err(MetricsError::InvalidParameter(format!(
                "unknown divisor {other:?} (expected unbiased or biased)"
            ))),
        }
    }
}

/// Mean and covariance of a sample, or of a population when `n` is `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianStats {
    mean: Vec<f64>,
    cov: Matrix,
    n: Option<usize>,
    divisor: Option<Divisor>,
}

impl GaussianStats {
    /// Population moments. The covariance is symmetrized.
    pub fn population(mean: Vec<f64>, cov: Matrix) -> Result<Self> {
        Self::build(mean, cov, None, None)
    }

    fn build(mean: Vec<f64>, mut cov: Matrix, n: Option<usize>, divisor: Option<Divisor>) -> Result<Self> {
        if !cov.is_square() || cov.rows() != mean.len() {
            return Err(MetricsError::Shape(format!(
                "mean has length {} but covariance is {}x{}",
                mean.len(),
                cov.rows(),
                cov.cols()
            )));
        }
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(MetricsError::InvalidData("non-finite mean".into()));
        }
        cov.symmetrize();
        Ok(Self { mean, cov, n, divisor })
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn cov(&self) -> &Matrix {
        &self.cov
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Number of samples behind the estimate; `None` for population moments.
    pub fn n(&self) -> Option<usize> {
        self.n
    }

    pub fn divisor(&self) -> Option<Divisor> {
        self.divisor
    }
}

pub(crate) fn column_means(x: &EmbeddingSet) -> Vec<f64> {
    let d = x.d();
    let mut mean = vec![0.0; d];
    for row in x.rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    let n = x.n() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    mean
}

/// Row-major copy of `x` with `mean` subtracted from every row.
pub(crate) fn centered(x: &EmbeddingSet, mean: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.n() * x.d());
    for row in x.rows() {
        out.extend(row.iter().zip(mean).map(|(v, m)| v - m));
    }
    out
}

/// `X^T X / denom` for a row-major `n x d` block.
pub(crate) fn scatter(centered: &[f64], n: usize, d: usize, denom: f64) -> Matrix {
    let xc = MatRef::from_row_major_slice(centered, n, d);
    let mut out = Mat::<f64>::zeros(d, d);
    matmul(&mut out, Accum::Replace, xc.transpose(), xc, 1.0 / denom, Par::Seq);
    let mut m = Matrix::from_faer(out.as_ref());
    m.symmetrize();
    m
}

pub fn estimate_stats(x: &EmbeddingSet, divisor: Divisor) -> Result<GaussianStats> {
    let n = x.n();
    if n < 2 {
        return Err(MetricsError::InsufficientSample(format!(
            "moment estimation needs at least 2 rows, got {n}"
        )));
    }
    let mean = column_means(x);
    let xc = centered(x, &mean);
    let denom = match divisor {
        Divisor::Unbiased => (n - 1) as f64,
        Divisor::Biased => n as f64,
    };
    let cov = scatter(&xc, n, x.d(), denom);
    GaussianStats::build(mean, cov, Some(n), Some(divisor))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sym_eigenvalues;

    #[test]
    fn two_points_unbiased() {
        let x = EmbeddingSet::from_rows(&[[0.0, 0.0], [2.0, 0.0]]).unwrap();
        let s = estimate_stats(&x, Divisor::Unbiased).unwrap();
        assert_eq!(s.mean(), &[1.0, 0.0]);
        assert_eq!(s.cov().as_slice(), &[2.0, 0.0, 0.0, 0.0]);
        assert_eq!(s.n(), Some(2));
    }

    #[test]
    fn identical_rows_zero_cov() {
        let x = EmbeddingSet::from_rows(&[[1.5, -2.0, 3.0]; 7]).unwrap();
        let s = estimate_stats(&x, Divisor::Unbiased).unwrap();
        assert!(s.cov().as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn symmetric_triplet_biased() {
        let x = EmbeddingSet::from_rows(&[[-1.0], [0.0], [1.0]]).unwrap();
        let s = estimate_stats(&x, Divisor::Biased).unwrap();
        assert_eq!(s.mean(), &[0.0]);
        assert!((s.cov().get(0, 0) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn single_row_rejected() {
        let x = EmbeddingSet::from_rows(&[[1.0, 2.0]]).unwrap();
        assert!(matches!(
            estimate_stats(&x, Divisor::Biased),
            Err(MetricsError::InsufficientSample(_))
        ));
    }

    #[test]
    fn covariance_is_psd() {
        // more dimensions than samples: rank-deficient
        let n = 5;
        let d = 9;
        let data: Vec<f64> = (0..n * d).map(|i| ((i * 37 % 11) as f64).sin()).collect();
        let s = estimate_stats(&EmbeddingSet::from_vec(n, d, data).unwrap(), Divisor::Unbiased).unwrap();
        let w = sym_eigenvalues(s.cov()).unwrap();
        let spectral = w.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        assert!(w[0] >= -1e-8 * spectral);
    }

    #[test]
    fn divisor_round_trips_through_str() {
        for d in [Divisor::Unbiased, Divisor::Biased] {
            assert_eq!(d.to_string().parse::<Divisor>().unwrap(), d);
        }
        assert!("median".parse::<Divisor>().is_err());
    }
}
