//! The embedding set: an `n x d` sample of feature vectors plus provenance.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{MetricsError, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    data: Matrix,
    source: String,
    model_tag: String,
}

impl EmbeddingSet {
    pub fn new(data: Matrix) -> Result<Self> {
        if data.rows() == 0 || data.cols() == 0 {
            return Err(MetricsError::Shape(format!(
                "embedding set must be non-empty, got {}x{}",
                data.rows(),
                data.cols()
            )));
        }
        Ok(Self {
            data,
            source: String::new(),
            model_tag: String::new(),
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn from_vec(n: usize, d: usize, data: Vec<f64>) -> Result<Self> {
        Self::new(Matrix::new(n, d, data)?)
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = source.into();
        self
    }

    pub fn with_model_tag(mut self, tag: impl Into<String>) -> Self {
        self.model_tag = tag.into();
        self
    }

    pub fn n(&self) -> usize {
        self.data.rows()
    }

    pub fn d(&self) -> usize {
        self.data.cols()
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn model_tag(&self) -> &str {
        &self.model_tag
    }

    pub fn matrix(&self) -> &Matrix {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.data.row(i)
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.as_slice().chunks_exact(self.d())
    }

    /// Copy with every row scaled to unit Euclidean norm.
    pub fn l2_normalized(&self) -> Result<Self> {
        let d = self.d();
        let mut data = self.data.clone();
        for (i, row) in data.data_mut().chunks_exact_mut(d).enumerate() {
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(MetricsError::InvalidData(format!(
                    "row {i} has zero norm and cannot be L2-normalized"
                )));
            }
            row.iter_mut().for_each(|v| *v /= norm);
        }
        Ok(Self {
            data,
            source: self.source.clone(),
            model_tag: self.model_tag.clone(),
        })
    }

    /// Rows at the given indices, in the given order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let d = self.d();
        let mut data = Vec::with_capacity(indices.len() * d);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self {
            data: Matrix::new(indices.len(), d, data).expect("rows of a valid set stay finite"),
            source: self.source.clone(),
            model_tag: self.model_tag.clone(),
        }
    }
}

/// Draws `k` rows without replacement; chosen rows keep their original order.
pub fn subsample(x: &EmbeddingSet, k: usize, seed: u64) -> Result<EmbeddingSet> {
    let n = x.n();
    if k == 0 || k > n {
        return Err(MetricsError::InsufficientSample(format!(
            "cannot draw {k} rows from a set of {n}"
        )));
    }
    if k == n {
        return Ok(x.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = index::sample(&mut rng, n, k).into_vec();
    idx.sort_unstable();
    Ok(x.select(&idx))
}
