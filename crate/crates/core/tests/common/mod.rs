//! Straightforward O(n²) reference implementations used as oracles.
#![allow(dead_code)]

use genmetrics_core::EmbeddingSet;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rel_err(got: f64, want: f64) -> f64 {
    if got == want {
        0.0
    } else {
        (got - want).abs() / want.abs().max(f64::MIN_POSITIVE)
    }
}

pub fn random_set(rng: &mut ChaCha8Rng, n: usize, d: usize, shift: f64) -> EmbeddingSet {
    let data = (0..n * d).map(|k| rng.random_range(-1.0..1.0) + if k % d == 0 { shift } else { 0.0 }).collect();
    EmbeddingSet::from_vec(n, d, data).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normalized_rows(x: &EmbeddingSet) -> Vec<Vec<f64>> {
    x.rows()
        .map(|r| {
            let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            r.iter().map(|v| v / norm).collect()
        })
        .collect()
}

fn plain_rows(x: &EmbeddingSet) -> Vec<Vec<f64>> {
    x.rows().map(|r| r.to_vec()).collect()
}

fn k(a: &[f64], b: &[f64], sigma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-d2 / (2.0 * sigma * sigma)).exp()
}

/// Unscaled unbiased MMD² by direct double loops.
pub fn naive_mmd(x: &EmbeddingSet, y: &EmbeddingSet, sigma: f64, l2: bool) -> f64 {
    let (xs, ys) = if l2 {
        (normalized_rows(x), normalized_rows(y))
    } else {
        (plain_rows(x), plain_rows(y))
    };
    let (m, n) = (xs.len() as f64, ys.len() as f64);
    let mut kxx = 0.0;
    for (i, a) in xs.iter().enumerate() {
        for (j, b) in xs.iter().enumerate() {
            if i != j {
                kxx += k(a, b, sigma);
            }
        }
    }
    let mut kyy = 0.0;
    for (i, a) in ys.iter().enumerate() {
        for (j, b) in ys.iter().enumerate() {
            if i != j {
                kyy += k(a, b, sigma);
            }
        }
    }
    let mut kxy = 0.0;
    for a in &xs {
        for b in &ys {
            kxy += k(a, b, sigma);
        }
    }
    kxx / (m * (m - 1.0)) + kyy / (n * (n - 1.0)) - 2.0 * kxy / (m * n)
}

/// Matrix of Mahalanobis inner products `(x_i - x̄)^T S^(-1) (x_j - x̄)` with the
/// biased covariance, via an explicit inverse.
pub fn mahalanobis_gram(x: &EmbeddingSet) -> DMatrix<f64> {
    let (n, d) = (x.n(), x.d());
    let m = DMatrix::from_row_slice(n, d, x.matrix().as_slice());
    let mean = m.row_mean();
    let mut xc = m.clone();
    for mut row in xc.row_iter_mut() {
        row -= &mean;
    }
    let s = xc.transpose() * &xc / n as f64;
    let si = s.try_inverse().expect("invertible covariance");
    &xc * si * xc.transpose()
}

pub struct NaiveNormality {
    pub skewness: f64,
    pub kurtosis: f64,
    pub hz: f64,
}

pub fn naive_normality(x: &EmbeddingSet) -> NaiveNormality {
    let (n, d) = (x.n() as f64, x.d() as f64);
    let g = mahalanobis_gram(x);
    let skewness = g.iter().map(|v| v * v * v).sum::<f64>() / (6.0 * n);
    let b2 = (0..x.n()).map(|i| g[(i, i)] * g[(i, i)]).sum::<f64>() / n;
    let kurtosis = (n / (8.0 * d * (d + 2.0))).sqrt() * (b2 - d * (d + 2.0));
    let beta = (1.0 / 2f64.sqrt()) * ((2.0 * d + 1.0) / 4.0).powf(1.0 / (d + 4.0)) * n.powf(1.0 / (d + 4.0));
    let b2s = beta * beta;
    let mut pair = 0.0;
    for j in 0..x.n() {
        for k in 0..x.n() {
            let djk = g[(j, j)] + g[(k, k)] - 2.0 * g[(j, k)];
            pair += (-b2s / 2.0 * djk).exp();
        }
    }
    let single: f64 = (0..x.n()).map(|j| (-b2s / (2.0 * (1.0 + b2s)) * g[(j, j)]).exp()).sum();
    let hz = pair / n - 2.0 * (1.0 + b2s).powf(-d / 2.0) * single + n * (1.0 + 2.0 * b2s).powf(-d / 2.0);
    NaiveNormality { skewness, kurtosis, hz }
}
