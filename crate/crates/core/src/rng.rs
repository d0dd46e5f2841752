//! Seeded random streams for synthetic data.
//!
//! Every stream is ChaCha8 keyed by a 64-bit seed, with a separate stream id
//! per consumer so that, for example, reference and mixture draws never share
//! state. Normals use the Box–Muller transform, so a given seed produces the
//! same numbers in any implementation with the same generator.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::embedding::EmbeddingSet;
use crate::error::Result;

const TWO_POW_M53: f64 = 1.0 / (1u64 << 53) as f64;

pub struct NormalStream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl NormalStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng, spare: None }
    }

    /// Uniform on `(0, 1]`.
    pub fn uniform_open0(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) + 1) as f64 * TWO_POW_M53
    }

    pub fn index(&mut self, k: usize) -> usize {
        self.rng.random_range(0..k)
    }

    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let r = (-2.0 * self.uniform_open0().ln()).sqrt();
        let theta = std::f64::consts::TAU * self.uniform_open0();
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }

    pub fn fill_normal(&mut self, out: &mut [f64]) {
        for v in out {
            *v = self.normal();
        }
    }
}

/// `n` rows of `N(mean, scale^2 I)` in `mean.len()` dimensions.
pub fn isotropic_gaussian(n: usize, mean: &[f64], scale: f64, seed: u64, stream: u64) -> Result<EmbeddingSet> {
    let d = mean.len();
    let mut rng = NormalStream::new(seed, stream);
    let mut data = vec![0.0; n * d];
    for row in data.chunks_exact_mut(d.max(1)) {
        for (v, m) in row.iter_mut().zip(mean) {
            *v = m + scale * rng.normal();
        }
    }
    EmbeddingSet::from_vec(n, d, data)
}
