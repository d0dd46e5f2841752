//! Shared inputs for the criterion benchmarks.

use genmetrics_core::experiments::shifted_gaussian_pair;
use genmetrics_core::{EmbeddingSet, Matrix};

/// Reference `N(0, I)` and generated `N(0.5 e1, I)`, `n x d` each.
pub fn embedding_pair(n: usize, d: usize) -> (EmbeddingSet, EmbeddingSet) {
    shifted_gaussian_pair(n, d, 0.5, 0).expect("valid synthetic sizes")
}

/// Sample covariance-like `d x d` SPD matrix built from `2d` Gaussian rows.
pub fn spd_matrix(d: usize, seed: u64) -> Matrix {
    let (x, _) = shifted_gaussian_pair(2 * d, d, 0.0, seed).expect("valid synthetic sizes");
    let m = x.matrix();
    let mut s = m.transpose().matmul(m).expect("matching shapes");
    s.symmetrize();
    s
}
