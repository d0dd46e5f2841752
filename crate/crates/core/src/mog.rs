//! Covariance-matched 2-D mixture of Gaussians.
//!
//! The reference is `N(0, σ² I₂)`. The mixture puts equal weight on four
//! Gaussians centred at `(λ,0), (0,λ), (-λ,0), (0,-λ)`, each with covariance
//! `τ² I₂` where `τ² = σ² - λ²/2`. Its mean is the origin and its covariance
//! is `(τ² + λ²/2) I₂ = σ² I₂` for every valid `λ`, so any metric built on the
//! first two moments cannot tell the two apart.

use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingSet;
use crate::error::{MetricsError, Result};
use crate::frechet::{fid, fid_infinity, frechet_gaussian, ExtrapolationConfig};
use crate::linalg::Matrix;
use crate::mmd::{KernelConfig, MmdReference};
use crate::rng::NormalStream;
use crate::stats::{Divisor, GaussianStats};

const REFERENCE_STREAM: u64 = 0;
const MIXTURE_STREAM: u64 = 1;

/// Displacements used when none are given: `0, 0.2, ..., 1.4`.
pub const DEFAULT_LAMBDAS: [f64; 8] = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoGConfig {
    pub sigma: f64,
    pub lambda: f64,
    pub seed: u64,
}

impl MoGConfig {
    pub fn new(sigma: f64, lambda: f64, seed: u64) -> Result<Self> {
        let cfg = Self { sigma, lambda, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(MetricsError::InvalidParameter(format!(
                "reference standard deviation must be positive, got {}",
                self.sigma
            )));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(MetricsError::InvalidParameter(format!(
                "displacement must be non-negative, got {}",
                self.lambda
            )));
        }
        let limit = 2.0 * self.sigma * self.sigma;
        let lambda_sq = self.lambda * self.lambda;
        // λ = σ√2 computed in floating point may land one ulp past the limit
        if lambda_sq > limit * (1.0 + 4.0 * f64::EPSILON) {
            return Err(MetricsError::InvalidLambda { lambda_sq, limit });
        }
        Ok(())
    }

    /// Per-component variance `τ² = σ² - λ²/2`, clamped at zero on the boundary.
    pub fn tau_sq(&self) -> f64 {
        (self.sigma * self.sigma - self.lambda * self.lambda / 2.0).max(0.0)
    }

    pub fn centers(&self) -> [[f64; 2]; 4] {
        let l = self.lambda;
        [[l, 0.0], [0.0, l], [-l, 0.0], [0.0, -l]]
    }
}

/// `n` draws from `N(0, σ² I₂)`.
pub fn sample_reference(cfg: &MoGConfig, n: usize) -> Result<EmbeddingSet> {
    cfg.validate()?;
    check_n(n)?;
    let mut rng = NormalStream::new(cfg.seed, REFERENCE_STREAM);
    let mut data = Vec::with_capacity(2 * n);
    for _ in 0..n {
        data.push(cfg.sigma * rng.normal());
        data.push(cfg.sigma * rng.normal());
    }
    Ok(EmbeddingSet::from_vec(n, 2, data)?.with_source(format!("mog-reference(sigma={})", cfg.sigma)))
}

/// `n` draws from the four-component mixture.
///
/// Each draw consumes one component index and two normals whatever `λ` is, so
/// the same seed gives coupled samples across displacements.
pub fn sample_mixture(cfg: &MoGConfig, n: usize) -> Result<EmbeddingSet> {
    cfg.validate()?;
    check_n(n)?;
    let tau = cfg.tau_sq().sqrt();
    let centers = cfg.centers();
    let mut rng = NormalStream::new(cfg.seed, MIXTURE_STREAM);
    let mut data = Vec::with_capacity(2 * n);
    for _ in 0..n {
        let c = centers[rng.index(4)];
        let (z0, z1) = (rng.normal(), rng.normal());
        data.push(c[0] + tau * z0);
        data.push(c[1] + tau * z1);
    }
    Ok(EmbeddingSet::from_vec(n, 2, data)?
        .with_source(format!("mog-mixture(sigma={}, lambda={})", cfg.sigma, cfg.lambda)))
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(MetricsError::InsufficientSample("sample size must be at least 1".into()));
    }
    Ok(())
}

pub fn reference_moments(sigma: f64) -> Result<GaussianStats> {
    let s2 = sigma * sigma;
    GaussianStats::population(vec![0.0, 0.0], Matrix::from_diagonal(&[s2, s2])?)
}

/// Population mean and covariance of the mixture: the origin and
/// `(τ² + λ²/2) I₂`, which is `σ² I₂` by the choice of `τ`.
pub fn analytic_moments(cfg: &MoGConfig) -> Result<GaussianStats> {
    cfg.validate()?;
    reference_moments(cfg.sigma)
}

/// The mixture as `(weight, component)` pairs.
pub fn mixture_components(cfg: &MoGConfig) -> Result<Vec<(f64, GaussianStats)>> {
    cfg.validate()?;
    let t = cfg.tau_sq();
    cfg.centers()
        .iter()
        .map(|c| Ok((0.25, GaussianStats::population(c.to_vec(), Matrix::from_diagonal(&[t, t])?)?)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureRow {
    pub lambda: f64,
    pub fd_analytic: f64,
    pub fd_sampled: f64,
    pub fd_inf: f64,
    pub mmd: f64,
}

/// Fréchet distances and MMD between the reference and the mixture for each `λ`.
///
/// The reference sample is drawn once; mixture samples share the seed across
/// `λ`. FID∞ subsets the mixture sample.
pub fn mixture_experiment(
    sigma: f64,
    lambdas: &[f64],
    n: usize,
    kernel: KernelConfig,
    seed: u64,
) -> Result<Vec<MixtureRow>> {
    let configs = lambdas
        .iter()
        .map(|&l| MoGConfig::new(sigma, l, seed))
        .collect::<Result<Vec<_>>>()?;
    let reference = sample_reference(&MoGConfig::new(sigma, 0.0, seed)?, n)?;
    let ref_moments = reference_moments(sigma)?;
    let mmd = MmdReference::new(&reference, kernel)?;
    let extrapolation = ExtrapolationConfig {
        seed,
        ..ExtrapolationConfig::default()
    };
    let mut rows = Vec::with_capacity(configs.len());
    for cfg in &configs {
        let mixture = sample_mixture(cfg, n)?;
        let row = MixtureRow {
            lambda: cfg.lambda,
            fd_analytic: frechet_gaussian(&ref_moments, &analytic_moments(cfg)?)?.distance_squared,
            fd_sampled: fid(&reference, &mixture, Divisor::Unbiased)?.distance_squared,
            fd_inf: fid_infinity(&reference, &mixture, &extrapolation, Divisor::Unbiased)?.value,
            mmd: mmd.compare(&mixture)?.value,
        };
        log::info!("lambda {}: {:?}", cfg.lambda, row);
        rows.push(row);
    }
    Ok(rows)
}
