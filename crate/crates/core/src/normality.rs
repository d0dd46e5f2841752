//! Multivariate normality tests: Mardia skewness and kurtosis, Henze–Zirkler.
//!
//! All three work on the Mahalanobis-whitened sample `y_i = L^(-1) (x_i - x̄)`
//! where `L L^T` is the biased (divide by `n`) sample covariance, so that
//! `y_i^T y_j = (x_i - x̄)^T Σ̂^(-1) (x_j - x̄)`.

use faer::Mat;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, LogNormal, Normal};

use crate::blockwise::{self_pair_sum, CubedInnerProduct, RbfPairs, Rows};
use crate::embedding::EmbeddingSet;
use crate::error::{MetricsError, Result};
use crate::linalg::{cholesky_lower, solve_lower_in_place, Matrix};
use crate::stats::{centered, column_means, scatter};

const BLOCK: usize = 1024;
const JITTER: f64 = 1e-10;
const P_UNDERFLOW: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkewnessResult {
    pub statistic: f64,
    pub degrees_of_freedom: u64,
    pub p_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KurtosisResult {
    pub statistic: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HenzeZirklerResult {
    pub statistic: f64,
    pub beta: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Accept,
    Reject,
}

impl Decision {
    pub fn at(p_value: f64, alpha: f64) -> Self {
        if p_value < alpha {
            Decision::Reject
        } else {
            Decision::Accept
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decisions {
    pub mardia_skewness: Decision,
    pub mardia_kurtosis: Decision,
    pub henze_zirkler: Decision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityReport {
    pub mardia_skewness: SkewnessResult,
    pub mardia_kurtosis: KurtosisResult,
    pub henze_zirkler: HenzeZirklerResult,
    pub n: usize,
    pub d: usize,
    pub alpha: f64,
    pub decisions: Decisions,
}

/// `d(d+1)(d+2)/6`.
pub fn skewness_degrees_of_freedom(d: usize) -> u64 {
    let d = d as u64;
    d * (d + 1) * (d + 2) / 6
}

fn report_p(p: f64) -> f64 {
    if p < P_UNDERFLOW {
        0.0
    } else {
        p.min(1.0)
    }
}

/// Whitened sample: row-major `n x d` and each row's squared norm.
struct Whitened {
    y: Vec<f64>,
    n: usize,
    d: usize,
    sq_norms: Vec<f64>,
}

impl Whitened {
    fn rows(&self) -> Rows<'_> {
        Rows::new(&self.y, self.n, self.d)
    }
}

fn whiten(x: &EmbeddingSet) -> Result<Whitened> {
    let (n, d) = (x.n(), x.d());
    if n <= d {
        return Err(MetricsError::InsufficientSample(format!(
            "normality tests need more rows than dimensions, got n = {n}, d = {d}"
        )));
    }
    let mean = column_means(x);
    let xc = centered(x, &mean);
    let cov = scatter(&xc, n, d, n as f64);
    let l = match cholesky_lower(&cov) {
        Some(l) => l,
        None => {
            let bump = JITTER * cov.trace() / d as f64;
            if bump.is_nan() || bump <= 0.0 {
                return Err(MetricsError::SingularCovariance);
            }
            log::debug!("covariance not positive definite, retrying with diagonal jitter {bump:e}");
            let mut data = cov.into_vec();
            for i in 0..d {
                data[i * d + i] += bump;
            }
            let jittered = Matrix::new(d, d, data)?;
            cholesky_lower(&jittered).ok_or(MetricsError::SingularCovariance)?
        }
    };
    // Column j of the d x n right-hand side is centered row j; after the
    // solve its column-major storage is the row-major whitened sample.
    let mut rhs = Mat::<f64>::from_fn(d, n, |i, j| xc[j * d + i]);
    solve_lower_in_place(l.as_ref(), rhs.as_mut());
    let mut y = Vec::with_capacity(n * d);
    for j in 0..n {
        for i in 0..d {
            y.push(rhs[(i, j)]);
        }
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(MetricsError::SingularCovariance);
    }
    let sq_norms = y.chunks_exact(d).map(|r| r.iter().map(|v| v * v).sum()).collect();
    Ok(Whitened { y, n, d, sq_norms })
}

fn skewness_of(w: &Whitened) -> Result<SkewnessResult> {
    // Σ_{i,j} (y_i·y_j)^3 = 2 Σ_{i<j} + Σ_i |y_i|^6
    let off = self_pair_sum(&w.rows(), BLOCK, &CubedInnerProduct);
    let diag: f64 = w.sq_norms.iter().map(|s| s * s * s).sum();
    let n = w.n as f64;
    let statistic = (2.0 * off + diag) / (6.0 * n);
    let df = skewness_degrees_of_freedom(w.d);
    let chi = ChiSquared::new(df as f64).map_err(|e| MetricsError::Numerical(e.to_string()))?;
    let p = chi.sf(statistic.max(0.0));
    Ok(SkewnessResult {
        statistic,
        degrees_of_freedom: df,
        p_value: report_p(p),
    })
}

fn kurtosis_of(w: &Whitened) -> KurtosisResult {
    let n = w.n as f64;
    let d = w.d as f64;
    let b2 = w.sq_norms.iter().map(|s| s * s).sum::<f64>() / n;
    let statistic = (n / (8.0 * d * (d + 2.0))).sqrt() * (b2 - d * (d + 2.0));
    let normal = Normal::standard();
    KurtosisResult {
        statistic,
        p_value: report_p(2.0 * normal.sf(statistic.abs())),
    }
}

/// Smoothing parameter `β = (1/√2) ((2d + 1)/4)^(1/(d+4)) n^(1/(d+4))`.
pub fn henze_zirkler_beta(n: usize, d: usize) -> f64 {
    let (n, d) = (n as f64, d as f64);
    std::f64::consts::FRAC_1_SQRT_2 * ((2.0 * d + 1.0) / 4.0).powf(1.0 / (d + 4.0)) * n.powf(1.0 / (d + 4.0))
}

/// Mean and variance of `T` under normality, for the lognormal approximation.
fn henze_zirkler_null_moments(beta: f64, d: f64) -> (f64, f64) {
    let b2 = beta * beta;
    let b4 = b2 * b2;
    let b8 = b4 * b4;
    let a = 1.0 + 2.0 * b2;
    let wb = (1.0 + b2) * (1.0 + 3.0 * b2);
    let mu = 1.0 - a.powf(-d / 2.0) * (1.0 + d * b2 / a + d * (d + 2.0) * b4 / (2.0 * a * a));
    let var = 2.0 * (1.0 + 4.0 * b2).powf(-d / 2.0)
        + 2.0 * a.powf(-d) * (1.0 + 2.0 * d * b4 / (a * a) + 3.0 * d * (d + 2.0) * b8 / (4.0 * a.powi(4)))
        - 4.0 * wb.powf(-d / 2.0) * (1.0 + 3.0 * d * b4 / (2.0 * wb) + d * (d + 2.0) * b8 / (2.0 * wb * wb));
    (mu, var)
}

fn henze_zirkler_of(w: &Whitened) -> Result<HenzeZirklerResult> {
    // T = (1/n) Σ_{j,k} exp(-β²/2 D_jk)
    //     - 2 (1 + β²)^(-d/2) Σ_j exp(-β²/(2(1 + β²)) D_j)
    //     + n (1 + 2β²)^(-d/2)
    // with D_jk = |y_j - y_k|^2 and D_j = |y_j|^2.
    let n = w.n as f64;
    let d = w.d as f64;
    let beta = henze_zirkler_beta(w.n, w.d);
    let b2 = beta * beta;
    let off = self_pair_sum(&w.rows(), BLOCK, &RbfPairs { gamma: b2 / 2.0 });
    let pair_term = (n + 2.0 * off) / n;
    let g = b2 / (2.0 * (1.0 + b2));
    let single: f64 = w.sq_norms.iter().map(|s| (-g * s).exp()).sum();
    let single_term = 2.0 * (1.0 + b2).powf(-d / 2.0) * single;
    let const_term = n * (1.0 + 2.0 * b2).powf(-d / 2.0);
    let statistic = (pair_term - single_term + const_term).max(0.0);

    let (mu, var) = henze_zirkler_null_moments(beta, d);
    let log_mean = (mu.powi(4) / (var + mu * mu)).sqrt().ln();
    let log_sd = ((var + mu * mu) / (mu * mu)).ln().sqrt();
    let p = if statistic == 0.0 {
        1.0
    } else {
        LogNormal::new(log_mean, log_sd)
            .map_err(|e| MetricsError::Numerical(format!("Henze–Zirkler null approximation: {e}")))?
            .sf(statistic)
    };
    Ok(HenzeZirklerResult {
        statistic,
        beta,
        p_value: report_p(p),
    })
}

/// Mardia's skewness `A = (1/6n) Σ_i Σ_j (y_i·y_j)^3`, chi-squared with `d(d+1)(d+2)/6` df.
pub fn mardia_skewness(x: &EmbeddingSet) -> Result<SkewnessResult> {
    skewness_of(&whiten(x)?)
}

/// Mardia's kurtosis `B = √(n / (8d(d+2))) ((1/n) Σ_i |y_i|^4 - d(d+2))`, two-sided standard normal.
pub fn mardia_kurtosis(x: &EmbeddingSet) -> Result<KurtosisResult> {
    Ok(kurtosis_of(&whiten(x)?))
}

/// Henze–Zirkler statistic with a lognormal approximation to its null distribution.
pub fn henze_zirkler(x: &EmbeddingSet) -> Result<HenzeZirklerResult> {
    henze_zirkler_of(&whiten(x)?)
}

pub fn normality_report(x: &EmbeddingSet, alpha: f64) -> Result<NormalityReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(MetricsError::InvalidParameter(format!(
            "significance level must lie in (0, 1), got {alpha}"
        )));
    }
    let w = whiten(x)?;
    let mardia_skewness = skewness_of(&w)?;
    let mardia_kurtosis = kurtosis_of(&w);
    let henze_zirkler = henze_zirkler_of(&w)?;
    Ok(NormalityReport {
        decisions: Decisions {
            mardia_skewness: Decision::at(mardia_skewness.p_value, alpha),
            mardia_kurtosis: Decision::at(mardia_kurtosis.p_value, alpha),
            henze_zirkler: Decision::at(henze_zirkler.p_value, alpha),
        },
        mardia_skewness,
        mardia_kurtosis,
        henze_zirkler,
        n: x.n(),
        d: x.d(),
        alpha,
    })
}
