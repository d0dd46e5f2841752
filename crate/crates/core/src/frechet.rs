//! Fréchet distance between Gaussian summaries (FID) and its
//! extrapolated, bias-corrected variant FID-infinity.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{subsample, EmbeddingSet};
use crate::error::{MetricsError, Result};
use crate::linalg::trace_sqrt_product;
use crate::stats::{estimate_stats, Divisor, GaussianStats};

/// Negative results above `-CLAMP_TOL * max(1, Tr Σa + Tr Σb)` are rounding noise.
const CLAMP_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrechetResult {
    pub distance_squared: f64,
    pub n_ref: Option<usize>,
    pub n_gen: Option<usize>,
    pub divisor: Option<Divisor>,
    /// Set when a small negative value was clamped to zero.
    pub clamped: bool,
}

/// `|μa - μb|^2 + Tr(Σa) + Tr(Σb) - 2 Tr((Σa Σb)^(1/2))`.
pub fn frechet_gaussian(a: &GaussianStats, b: &GaussianStats) -> Result<FrechetResult> {
    if a.dim() != b.dim() {
        return Err(MetricsError::Shape(format!(
            "dimension mismatch: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    let mut result = FrechetResult {
        distance_squared: 0.0,
        n_ref: a.n(),
        n_gen: b.n(),
        divisor: a.divisor().or(b.divisor()),
        clamped: false,
    };
    if a.mean() == b.mean() && a.cov() == b.cov() {
        return Ok(result);
    }
    let mean_term: f64 = a.mean().iter().zip(b.mean()).map(|(x, y)| (x - y) * (x - y)).sum();
    let traces = a.cov().trace() + b.cov().trace();
    let cross = trace_sqrt_product(a.cov(), b.cov())?;
    let value = mean_term + traces - 2.0 * cross;
    if value < 0.0 {
        let tol = CLAMP_TOL * traces.max(1.0);
        if value < -tol {
            return Err(MetricsError::Numerical(format!(
                "Fréchet distance evaluated to {value:e}, below the rounding tolerance {tol:e}"
            )));
        }
        result.clamped = true;
    } else {
        result.distance_squared = value;
    }
    Ok(result)
}

/// FID between two embedding sets.
pub fn fid(reference: &EmbeddingSet, generated: &EmbeddingSet, divisor: Divisor) -> Result<FrechetResult> {
    if reference.d() != generated.d() {
        return Err(MetricsError::Shape(format!(
            "embedding dimensions differ: {} vs {}",
            reference.d(),
            generated.d()
        )));
    }
    for (label, set) in [("reference", reference), ("generated", generated)] {
        if set.n() < set.d() {
            log::warn!(
                "{label} set has {} samples for dimension {}; its covariance is rank-deficient and FID is strongly biased",
                set.n(),
                set.d()
            );
        }
    }
    let a = estimate_stats(reference, divisor)?;
    let b = estimate_stats(generated, divisor)?;
    frechet_gaussian(&a, &b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtrapolationConfig {
    pub num_points: usize,
    /// Smallest subset size; reduced to `n / 2` for sets under 10 000 rows.
    pub min_size: usize,
    pub seed: u64,
}

impl Default for ExtrapolationConfig {
    fn default() -> Self {
        Self {
            num_points: 15,
            min_size: 5000,
            seed: 0,
        }
    }
}

impl ExtrapolationConfig {
    pub fn effective_min_size(&self, n: usize) -> usize {
        if n < 10_000 {
            self.min_size.min(n / 2)
        } else {
            self.min_size
        }
    }

    /// Subset sizes linearly spaced over `[min_size, n]`, strictly increasing, ending at `n`.
    pub fn schedule(&self, n: usize) -> Result<Vec<usize>> {
        if self.num_points < 3 {
            return Err(MetricsError::InvalidParameter(format!(
                "extrapolation needs at least 3 points, got {}",
                self.num_points
            )));
        }
        let lo = self.effective_min_size(n);
        if lo < 2 || lo >= n {
            return Err(MetricsError::InsufficientSample(format!(
                "minimum subset size {lo} must satisfy 2 <= size < n = {n}"
            )));
        }
        let steps = (self.num_points - 1) as f64;
        let sizes: Vec<usize> = (0..self.num_points)
            .map(|k| lo + ((n - lo) as f64 * k as f64 / steps).round() as usize)
            .collect();
        if sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(MetricsError::InsufficientSample(format!(
                "{} distinct subset sizes do not fit between {lo} and {n}",
                self.num_points
            )));
        }
        Ok(sizes)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationPoint {
    pub size: usize,
    pub fid: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidInfinity {
    /// Intercept of the fit `FID = a + b / N`, i.e. the value at `N -> inf`.
    pub value: f64,
    pub slope: f64,
    pub points: Vec<ExtrapolationPoint>,
}

/// Ordinary least squares of `fid` on `1 / size`; returns `(intercept, slope)`.
pub fn extrapolate_intercept(points: &[ExtrapolationPoint]) -> Result<(f64, f64)> {
    if points.len() < 2 {
        return Err(MetricsError::InsufficientSample("need at least two points to fit".into()));
    }
    let k = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| 1.0 / p.size as f64).collect();
    let mx = xs.iter().sum::<f64>() / k;
    let my = points.iter().map(|p| p.fid).sum::<f64>() / k;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, p) in xs.iter().zip(points) {
        sxy += (x - mx) * (p.fid - my);
        sxx += (x - mx) * (x - mx);
    }
    if sxx == 0.0 {
        return Err(MetricsError::Numerical("subset sizes are not distinct".into()));
    }
    let slope = sxy / sxx;
    Ok((my - slope * mx, slope))
}

/// Seed for the `k`-th subset of an extrapolation run.
fn point_seed(seed: u64, k: usize) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ (k as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// FID-infinity: FID on nested random subsets of `generated` (reference
/// fixed), extrapolated linearly in `1 / N` to infinite sample size.
pub fn fid_infinity(
    reference: &EmbeddingSet,
    generated: &EmbeddingSet,
    cfg: &ExtrapolationConfig,
    divisor: Divisor,
) -> Result<FidInfinity> {
    if reference.d() != generated.d() {
        return Err(MetricsError::Shape(format!(
            "embedding dimensions differ: {} vs {}",
            reference.d(),
            generated.d()
        )));
    }
    let sizes = cfg.schedule(generated.n())?;
    let ref_stats = estimate_stats(reference, divisor)?;
    let points = sizes
        .par_iter()
        .enumerate()
        .map(|(k, &size)| {
            let subset = subsample(generated, size, point_seed(cfg.seed, k))?;
            let stats = estimate_stats(&subset, divisor)?;
            let fid = frechet_gaussian(&ref_stats, &stats)?.distance_squared;
            Ok(ExtrapolationPoint { size, fid })
        })
        .collect::<Result<Vec<_>>>()?;
    let (value, slope) = extrapolate_intercept(&points)?;
    Ok(FidInfinity { value, slope, points })
}
