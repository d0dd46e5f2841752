//! Unbiased squared MMD with a Gaussian RBF kernel, and the CMMD preset.
//!
//! For samples `X` (m rows) and `Y` (n rows):
//!
//! ```text
//! MMD^2_u = 1/(m(m-1)) Σ_{i≠j} k(x_i, x_j)
//!         + 1/(n(n-1)) Σ_{i≠j} k(y_i, y_j)
//!         - 2/(mn)     Σ_{i,j}  k(x_i, y_j),      k(x, y) = exp(-|x - y|^2 / (2σ^2))
//! ```
//!
//! CMMD is `1000 * MMD^2_u` with `σ = 10` on L2-normalized embeddings.

use serde::{Deserialize, Serialize};

use crate::blockwise::{cross_pair_sum, self_pair_sum, RbfPairs, Rows};
use crate::embedding::EmbeddingSet;
use crate::error::{MetricsError, Result};
use crate::linalg::{clip_psd, sym_eigendecomposition, Matrix};
use crate::stats::GaussianStats;

pub const CMMD_SIGMA: f64 = 10.0;
pub const CMMD_SCALE: f64 = 1000.0;
pub const DEFAULT_BLOCK_SIZE: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub bandwidth_sigma: f64,
    pub output_scale: f64,
    pub l2_normalize: bool,
    pub block_size: usize,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self::cmmd()
    }
}

impl KernelConfig {
    /// σ = 10, scale 1000, unit-norm rows.
    pub fn cmmd() -> Self {
        Self {
            bandwidth_sigma: CMMD_SIGMA,
            output_scale: CMMD_SCALE,
            l2_normalize: true,
            block_size: DEFAULT_BLOCK_SIZE,
        }
    }

    /// Plain MMD on raw rows with the given bandwidth and unit scale.
    pub fn raw(sigma: f64) -> Self {
        Self {
            bandwidth_sigma: sigma,
            output_scale: 1.0,
            l2_normalize: false,
            block_size: DEFAULT_BLOCK_SIZE,
        }
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.output_scale = scale;
        self
    }

    pub fn with_block_size(mut self, block_size: usize) -> Self {
        self.block_size = block_size;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth_sigma.is_finite() && self.bandwidth_sigma > 0.0) {
            return Err(MetricsError::InvalidParameter(format!(
                "bandwidth must be finite and positive, got {}",
                self.bandwidth_sigma
            )));
        }
        if !(self.output_scale.is_finite() && self.output_scale > 0.0) {
            return Err(MetricsError::InvalidParameter(format!(
                "output scale must be finite and positive, got {}",
                self.output_scale
            )));
        }
        if self.block_size == 0 {
            return Err(MetricsError::InvalidParameter("block size must be at least 1".into()));
        }
        Ok(())
    }

    fn gamma(&self) -> f64 {
        1.0 / (2.0 * self.bandwidth_sigma * self.bandwidth_sigma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MmdResult {
    /// `raw_estimate * output_scale`.
    pub value: f64,
    pub raw_estimate: f64,
    pub m: usize,
    pub n: usize,
    pub config: KernelConfig,
}

pub fn rbf_kernel(x: &[f64], y: &[f64], sigma: f64) -> Result<f64> {
    if x.len() != y.len() {
        return Err(MetricsError::Shape(format!(
            "vector lengths differ: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(MetricsError::InvalidParameter(format!("bandwidth must be positive, got {sigma}")));
    }
    let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((-d2 / (2.0 * sigma * sigma)).exp())
}

/// Mean of `k(x_i, x_j)` over ordered pairs `i != j`.
fn within_mean(x: &EmbeddingSet, cfg: &KernelConfig) -> f64 {
    let m = x.n();
    let rows = Rows::new(x.matrix().as_slice(), m, x.d());
    let half = self_pair_sum(&rows, cfg.block_size, &RbfPairs { gamma: cfg.gamma() });
    2.0 * half / (m as f64 * (m - 1) as f64)
}

fn between_mean(x: &EmbeddingSet, y: &EmbeddingSet, cfg: &KernelConfig) -> f64 {
    let rx = Rows::new(x.matrix().as_slice(), x.n(), x.d());
    let ry = Rows::new(y.matrix().as_slice(), y.n(), y.d());
    cross_pair_sum(&rx, &ry, cfg.block_size, &RbfPairs { gamma: cfg.gamma() }) / (x.n() as f64 * y.n() as f64)
}

fn prepare(x: &EmbeddingSet, cfg: &KernelConfig, label: &str) -> Result<EmbeddingSet> {
    if x.n() < 2 {
        return Err(MetricsError::InsufficientSample(format!(
            "{label} set needs at least 2 rows for the unbiased estimator, got {}",
            x.n()
        )));
    }
    if cfg.l2_normalize {
        x.l2_normalized()
    } else {
        Ok(x.clone())
    }
}

/// One side of an MMD comparison with its within-set kernel mean cached,
/// for comparing a fixed reference against many generated sets.
#[derive(Debug, Clone)]
pub struct MmdReference {
    rows: EmbeddingSet,
    within: f64,
    config: KernelConfig,
}

impl MmdReference {
    pub fn new(reference: &EmbeddingSet, config: KernelConfig) -> Result<Self> {
        config.validate()?;
        let rows = prepare(reference, &config, "reference")?;
        let within = within_mean(&rows, &config);
        Ok(Self { rows, within, config })
    }

    pub fn config(&self) -> &KernelConfig {
        &self.config
    }

    pub fn compare(&self, generated: &EmbeddingSet) -> Result<MmdResult> {
        if generated.d() != self.rows.d() {
            return Err(MetricsError::Shape(format!(
                "embedding dimensions differ: {} vs {}",
                self.rows.d(),
                generated.d()
            )));
        }
        let y = prepare(generated, &self.config, "generated")?;
        let kyy = within_mean(&y, &self.config);
        let kxy = between_mean(&self.rows, &y, &self.config);
        let raw_estimate = self.within + kyy - 2.0 * kxy;
        Ok(MmdResult {
            value: raw_estimate * self.config.output_scale,
            raw_estimate,
            m: self.rows.n(),
            n: y.n(),
            config: self.config,
        })
    }
}

pub fn mmd_unbiased(x: &EmbeddingSet, y: &EmbeddingSet, cfg: &KernelConfig) -> Result<MmdResult> {
    MmdReference::new(x, *cfg)?.compare(y)
}

/// CMMD: the unbiased MMD preset with σ = 10, ×1000, unit-norm rows.
pub fn cmmd(reference: &EmbeddingSet, generated: &EmbeddingSet) -> Result<MmdResult> {
    cmmd_with(reference, generated, KernelConfig::cmmd())
}

pub fn cmmd_with(reference: &EmbeddingSet, generated: &EmbeddingSet, cfg: KernelConfig) -> Result<MmdResult> {
    if reference.n() != generated.n() {
        log::warn!(
            "CMMD is defined for equally sized sets; got {} reference and {} generated rows",
            reference.n(),
            generated.n()
        );
    }
    mmd_unbiased(reference, generated, &cfg)
}

/// `E[k(x, y)]` for independent `x ~ N(μa, Σa)`, `y ~ N(μb, Σb)` under the RBF kernel:
/// `det(I + S/σ^2)^(-1/2) exp(-½ Δ^T (S + σ^2 I)^(-1) Δ)` with `S = Σa + Σb`, `Δ = μa - μb`.
pub fn expected_rbf_kernel(a: &GaussianStats, b: &GaussianStats, sigma: f64) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(MetricsError::Shape(format!("dimension mismatch: {} vs {}", a.dim(), b.dim())));
    }
    let d = a.dim();
    let s2 = sigma * sigma;
    let sum: Vec<f64> = a
        .cov()
        .as_slice()
        .iter()
        .zip(b.cov().as_slice())
        .map(|(x, y)| x + y)
        .collect();
    let mut evd = sym_eigendecomposition(&Matrix::new(d, d, sum)?)?;
    clip_psd(&mut evd.eigenvalues)?;
    let delta: Vec<f64> = a.mean().iter().zip(b.mean()).map(|(x, y)| x - y).collect();
    let mut log_det = 0.0;
    let mut quad = 0.0;
    for (k, &w) in evd.eigenvalues.iter().enumerate() {
        log_det += (1.0 + w / s2).ln();
        let proj: f64 = (0..d).map(|i| evd.eigenvectors.get(i, k) * delta[i]).sum();
        quad += proj * proj / (w + s2);
    }
    Ok((-0.5 * log_det - 0.5 * quad).exp())
}

/// Population squared MMD between two Gaussians under the RBF kernel.
pub fn analytic_gaussian_mmd(a: &GaussianStats, b: &GaussianStats, sigma: f64) -> Result<f64> {
    Ok(expected_rbf_kernel(a, a, sigma)? + expected_rbf_kernel(b, b, sigma)? - 2.0 * expected_rbf_kernel(a, b, sigma)?)
}

/// Population squared MMD between two Gaussian mixtures, given as `(weight, component)` lists.
pub fn analytic_mixture_mmd(
    p: &[(f64, GaussianStats)],
    q: &[(f64, GaussianStats)],
    sigma: f64,
) -> Result<f64> {
    let cross = |u: &[(f64, GaussianStats)], v: &[(f64, GaussianStats)]| -> Result<f64> {
        let mut acc = 0.0;
        for (wu, gu) in u {
            for (wv, gv) in v {
                acc += wu * wv * expected_rbf_kernel(gu, gv, sigma)?;
            }
        }
        Ok(acc)
    };
    Ok(cross(p, p)? + cross(q, q)? - 2.0 * cross(p, q)?)
}
