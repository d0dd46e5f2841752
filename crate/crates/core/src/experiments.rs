//! Sample-size sensitivity and runtime comparisons between FID and MMD.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::embedding::{subsample, EmbeddingSet};
use crate::error::{MetricsError, Result};
use crate::frechet::{fid, frechet_gaussian};
use crate::mmd::{mmd_unbiased, KernelConfig, MmdReference};
use crate::rng::isotropic_gaussian;
use crate::stats::{estimate_stats, Divisor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleEfficiencyRow {
    pub size: usize,
    pub seed: u64,
    pub fid: f64,
    pub cmmd: f64,
    /// `fid` divided by FID on the full generated set.
    pub fid_rel: f64,
    pub cmmd_rel: f64,
}

/// FID and CMMD between `reference` and random subsets of `generated`.
///
/// For each size and seed a subset of that size is drawn without replacement
/// from `generated`; both metrics are also reported relative to their values
/// on the full generated set.
pub fn sample_efficiency(
    reference: &EmbeddingSet,
    generated: &EmbeddingSet,
    sizes: &[usize],
    seeds: &[u64],
    kernel: KernelConfig,
    divisor: Divisor,
) -> Result<Vec<SampleEfficiencyRow>> {
    let n = generated.n();
    if let Some(&bad) = sizes.iter().find(|&&s| s < 2 || s > n) {
        return Err(MetricsError::InsufficientSample(format!(
            "subset size {bad} must lie between 2 and the generated set size {n}"
        )));
    }
    let mmd = MmdReference::new(reference, kernel)?;
    let full_fid = fid(reference, generated, divisor)?.distance_squared;
    let full_cmmd = mmd.compare(generated)?.value;
    let mut rows = Vec::with_capacity(sizes.len() * seeds.len());
    for &size in sizes {
        for &seed in seeds {
            let subset = subsample(generated, size, seed)?;
            let fid_value = fid(reference, &subset, divisor)?.distance_squared;
            let cmmd_value = mmd.compare(&subset)?.value;
            rows.push(SampleEfficiencyRow {
                size,
                seed,
                fid: fid_value,
                cmmd: cmmd_value,
                fid_rel: fid_value / full_fid,
                cmmd_rel: cmmd_value / full_cmmd,
            });
        }
    }
    Ok(rows)
}

/// Reference `N(0, I)` and generated `N(shift * e1, I)`, `n` rows each.
pub fn shifted_gaussian_pair(n: usize, d: usize, shift: f64, seed: u64) -> Result<(EmbeddingSet, EmbeddingSet)> {
    let zero = vec![0.0; d];
    let mut mean = zero.clone();
    if let Some(m) = mean.first_mut() {
        *m = shift;
    }
    let reference = isotropic_gaussian(n, &zero, 1.0, seed, 0)?.with_source("synthetic-reference");
    let generated = isotropic_gaussian(n, &mean, 1.0, seed, 1)?.with_source("synthetic-generated");
    Ok((reference, generated))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingSummary {
    pub median_ms: f64,
    pub min_ms: f64,
    pub max_ms: f64,
}

impl TimingSummary {
    pub fn from_samples(samples_ms: &[f64]) -> Result<Self> {
        if samples_ms.is_empty() {
            return Err(MetricsError::InvalidParameter("no timing samples".into()));
        }
        let mut s = samples_ms.to_vec();
        s.sort_by(f64::total_cmp);
        let k = s.len();
        let median_ms = if k % 2 == 1 { s[k / 2] } else { 0.5 * (s[k / 2 - 1] + s[k / 2]) };
        Ok(Self {
            median_ms,
            min_ms: s[0],
            max_ms: s[k - 1],
        })
    }

    pub fn spread_ms(&self) -> f64 {
        self.max_ms - self.min_ms
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub n: usize,
    pub d: usize,
    pub reps: usize,
    pub seed: u64,
    pub kernel: KernelConfig,
    pub divisor: Divisor,
    /// Moment estimation for both sets plus the Fréchet distance.
    pub frechet: TimingSummary,
    pub mmd: TimingSummary,
    pub frechet_value: f64,
    pub mmd_value: f64,
    pub frechet_samples_ms: Vec<f64>,
    pub mmd_samples_ms: Vec<f64>,
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Wall time of the Fréchet distance (including moment estimation) against
/// the unbiased MMD on the same synthetic `n x d` pair, over `reps` runs.
pub fn bench_costs(n: usize, d: usize, reps: usize, seed: u64, kernel: KernelConfig, divisor: Divisor) -> Result<BenchReport> {
    if reps == 0 {
        return Err(MetricsError::InvalidParameter("need at least one repetition".into()));
    }
    let (reference, generated) = shifted_gaussian_pair(n, d, 0.5, seed)?;
    let mut fd_ms = Vec::with_capacity(reps);
    let mut mmd_ms = Vec::with_capacity(reps);
    let mut values: Option<(f64, f64)> = None;
    for rep in 0..reps {
        let t = Instant::now();
        let a = estimate_stats(&reference, divisor)?;
        let b = estimate_stats(&generated, divisor)?;
        let fd = frechet_gaussian(&a, &b)?.distance_squared;
        fd_ms.push(elapsed_ms(t));

        let t = Instant::now();
        let mmd = mmd_unbiased(&reference, &generated, &kernel)?.value;
        mmd_ms.push(elapsed_ms(t));

        log::info!("rep {rep}: frechet {:.1} ms, mmd {:.1} ms", fd_ms[rep], mmd_ms[rep]);
        match values {
            None => values = Some((fd, mmd)),
            Some(v) if v != (fd, mmd) => {
                return Err(MetricsError::Numerical(format!(
                    "repetition {rep} changed the metric values: {v:?} vs {:?}",
                    (fd, mmd)
                )))
            }
            Some(_) => {}
        }
    }
    let (frechet_value, mmd_value) = values.expect("reps >= 1");
    Ok(BenchReport {
        n,
        d,
        reps,
        seed,
        kernel,
        divisor,
        frechet: TimingSummary::from_samples(&fd_ms)?,
        mmd: TimingSummary::from_samples(&mmd_ms)?,
        frechet_value,
        mmd_value,
        frechet_samples_ms: fd_ms,
        mmd_samples_ms: mmd_ms,
    })
}
