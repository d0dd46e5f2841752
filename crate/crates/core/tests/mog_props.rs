use genmetrics_core::mog::{analytic_moments, reference_moments, sample_mixture, sample_reference, DEFAULT_LAMBDAS};
use genmetrics_core::{estimate_stats, frechet_gaussian, Divisor, EmbeddingSet, MoGConfig};
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn mean_norm_and_cov_error(x: &EmbeddingSet, sigma: f64) -> (f64, f64) {
    let s = estimate_stats(x, Divisor::Biased).unwrap();
    let mean_norm = s.mean().iter().map(|v| v * v).sum::<f64>().sqrt();
    let s2 = sigma * sigma;
    let c = s.cov();
    let frob = ((c.get(0, 0) - s2).powi(2) + 2.0 * c.get(0, 1).powi(2) + (c.get(1, 1) - s2).powi(2)).sqrt();
    (mean_norm, frob)
}

#[test]
fn reference_sample_moments() {
    let cfg = MoGConfig::new(2.0, 0.0, 8).unwrap();
    let n = 50_000;
    let x = sample_reference(&cfg, n).unwrap();
    let s = estimate_stats(&x, Divisor::Unbiased).unwrap();
    for m in s.mean() {
        assert!(m.abs() < 4.0 * 2.0 / (n as f64).sqrt());
    }
    let (_, frob) = mean_norm_and_cov_error(&x, 2.0);
    assert!(frob < 5.0 * 4.0 * (6.0 / n as f64).sqrt());
    assert_eq!(x.matrix(), sample_reference(&cfg, n).unwrap().matrix());
}

#[test]
fn mixture_matches_first_two_moments() {
    // For every λ the fourth moments are at most Gaussian ones, so the
    // Gaussian Monte-Carlo bound E|S - σ²I|_F^2 ≈ 6σ⁴/n applies.
    let (sigma, n) = (1.5, 100_000);
    let mut failures = 0;
    for seed in 0..100u64 {
        let lambda = (seed as f64 / 99.0) * sigma * 2f64.sqrt();
        let x = sample_mixture(&MoGConfig::new(sigma, lambda, seed).unwrap(), n).unwrap();
        let (mean_norm, frob) = mean_norm_and_cov_error(&x, sigma);
        let ok = mean_norm <= 5.0 * sigma / (n as f64).sqrt() * 2f64.sqrt()
            && frob <= 5.0 * sigma * sigma * (6.0 / n as f64).sqrt();
        failures += (!ok) as usize;
    }
    assert!(failures <= 5, "{failures} seeds outside the Monte-Carlo bound");
}

#[test]
fn quadrant_counts_are_uniform() {
    let n = 100_000;
    let x = sample_mixture(&MoGConfig::new(1.0, 1.0, 21).unwrap(), n).unwrap();
    let mut counts = [0f64; 4];
    for r in x.rows() {
        let q = match (r[0] >= 0.0, r[1] >= 0.0) {
            (true, true) => 0,
            (false, true) => 1,
            (false, false) => 2,
            (true, false) => 3,
        };
        counts[q] += 1.0;
    }
    let expected = n as f64 / 4.0;
    let stat: f64 = counts.iter().map(|c| (c - expected).powi(2) / expected).sum();
    let critical = ChiSquared::new(3.0).unwrap().inverse_cdf(0.99);
    assert!(stat < critical, "chi-squared {stat} over {critical}");
}

#[test]
fn coupled_draws_share_components_and_noise() {
    // x = c_k(λ) + τ(λ) z with the same k and z for every λ at a fixed seed
    let ca = MoGConfig::new(1.0, 0.4, 3).unwrap();
    let cb = MoGConfig::new(1.0, 1.1, 3).unwrap();
    let a = sample_mixture(&ca, 500).unwrap();
    let b = sample_mixture(&cb, 500).unwrap();
    let (ta, tb) = (ca.tau_sq().sqrt(), cb.tau_sq().sqrt());
    for (ra, rb) in a.rows().zip(b.rows()) {
        let matched = (0..4).any(|k| {
            (0..2).all(|j| {
                let za = (ra[j] - ca.centers()[k][j]) / ta;
                let zb = (rb[j] - cb.centers()[k][j]) / tb;
                (za - zb).abs() < 1e-9
            })
        });
        assert!(matched, "{ra:?} / {rb:?}");
    }
}

#[test]
fn default_grid_is_valid() {
    for &l in &DEFAULT_LAMBDAS {
        assert!(MoGConfig::new(1.0, l, 0).is_ok());
    }
}

proptest! {
    #[test]
    fn analytic_frechet_distance_is_exactly_zero(sigma in 0.01f64..100.0, frac in 0.0f64..=1.0) {
        let cfg = MoGConfig::new(sigma, frac * sigma * 2f64.sqrt(), 0).unwrap();
        let fd = frechet_gaussian(&reference_moments(sigma).unwrap(), &analytic_moments(&cfg).unwrap()).unwrap();
        prop_assert_eq!(fd.distance_squared, 0.0);
        prop_assert!((cfg.tau_sq() + cfg.lambda * cfg.lambda / 2.0 - sigma * sigma).abs() <= 4.0 * f64::EPSILON * sigma * sigma);
    }
}
