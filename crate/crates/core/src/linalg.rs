//! Dense symmetric linear algebra on row-major `f64` matrices.
//!
//! Heavy kernels (matrix products, symmetric eigensolvers, Cholesky) are
//! delegated to `faer`; this module owns the storage type and the PSD
//! handling rules used by the Fréchet and normality paths.

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, MatRef, Par, Side};

use crate::error::{MetricsError, Result};

/// Relative tolerance for the symmetry check of eigensolver inputs.
const SYMMETRY_TOL: f64 = 1e-9;

/// Negative eigenvalues down to `-PSD_TOL * ||S||_2` are treated as zero.
pub const PSD_TOL: f64 = 1e-8;

/// Dense row-major matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows.checked_mul(cols) != Some(data.len()) {
            return Err(MetricsError::Shape(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows.saturating_mul(cols),
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(MetricsError::InvalidData(format!(
                "non-finite entry {} at row {}, column {}",
                data[pos],
                pos / cols.max(1),
                pos % cols.max(1)
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        let n = diag.len();
        let mut data = vec![0.0; n * n];
        for (i, &v) in diag.iter().enumerate() {
            data[i * n + i] = v;
        }
        Self::new(n, n, data)
    }

    /// Builds a matrix from nested rows; all rows must have equal length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(MetricsError::Shape(format!(
                    "row {i} has {} columns, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    /// Largest absolute entry of `A - A^T` relative to `max(1, max |A_ij|)`.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.data.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        let mut worst = 0.0_f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst / scale
    }

    /// Replaces the matrix with `(A + A^T) / 2`.
    pub fn symmetrize(&mut self) {
        let n = self.rows;
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (self.data[i * n + j] + self.data[j * n + i]);
                self.data[i * n + j] = avg;
                self.data[j * n + i] = avg;
            }
        }
    }

    pub fn matmul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.rows {
            return Err(MetricsError::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Mat::<f64>::zeros(self.rows, rhs.cols);
        matmul(&mut out, Accum::Replace, self.view(), rhs.view(), 1.0, Par::Seq);
        Ok(Self::from_faer(out.as_ref()))
    }

    pub(crate) fn view(&self) -> MatRef<'_, f64> {
        MatRef::from_row_major_slice(&self.data, self.rows, self.cols)
    }

    pub(crate) fn from_faer(m: MatRef<'_, f64>) -> Self {
        let (rows, cols) = (m.nrows(), m.ncols());
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(m[(i, j)]);
            }
        }
        Self { rows, cols, data }
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

/// Eigen-decomposition `A = V diag(w) V^T` of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    /// Eigenvalues in ascending order.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, matching `eigenvalues`.
    pub eigenvectors: Matrix,
}

impl SymmetricEigen {
    /// Rebuilds `V diag(f(w)) V^T`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let n = self.eigenvalues.len();
        let v = self.eigenvectors.view();
        let mut scaled = Mat::<f64>::zeros(n, n);
        for j in 0..n {
            let s = f(self.eigenvalues[j]);
            for i in 0..n {
                scaled[(i, j)] = v[(i, j)] * s;
            }
        }
        let mut out = Mat::<f64>::zeros(n, n);
        matmul(&mut out, Accum::Replace, &scaled, v.transpose(), 1.0, Par::Seq);
        let mut m = Matrix::from_faer(out.as_ref());
        m.symmetrize();
        m
    }
}

fn check_symmetric(a: &Matrix) -> Result<()> {
    if !a.is_square() {
        return Err(MetricsError::Shape(format!(
            "expected a square matrix, got {}x{}",
            a.rows, a.cols
        )));
    }
    let asym = a.asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(MetricsError::Shape(format!(
            "matrix is not symmetric (relative asymmetry {asym:e})"
        )));
    }
    Ok(())
}

pub fn sym_eigendecomposition(a: &Matrix) -> Result<SymmetricEigen> {
    check_symmetric(a)?;
    let n = a.rows;
    if n == 0 {
        return Ok(SymmetricEigen {
            eigenvalues: Vec::new(),
            eigenvectors: Matrix::zeros(0, 0),
        });
    }
    let evd = a
        .view()
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| MetricsError::Numerical(format!("eigensolver did not converge: {e:?}")))?;
    let s = evd.S();
    let eigenvalues: Vec<f64> = (0..n).map(|i| s[i]).collect();
    Ok(SymmetricEigen {
        eigenvalues,
        eigenvectors: Matrix::from_faer(evd.U()),
    })
}

/// Eigenvalues only, ascending.
pub fn sym_eigenvalues(a: &Matrix) -> Result<Vec<f64>> {
    check_symmetric(a)?;
    if a.rows == 0 {
        return Ok(Vec::new());
    }
    a.view()
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| MetricsError::Numerical(format!("eigensolver did not converge: {e:?}")))
}

/// Clips eigenvalues within the PSD tolerance to zero; errors on anything more negative.
pub(crate) fn clip_psd(eigenvalues: &mut [f64]) -> Result<()> {
    let spectral = eigenvalues.iter().fold(0.0_f64, |m, w| m.max(w.abs()));
    let tolerance = PSD_TOL * spectral;
    for w in eigenvalues.iter_mut() {
        if *w < -tolerance {
            return Err(MetricsError::NotPsd {
                min_eigenvalue: *w,
                tolerance,
            });
        }
        if *w < 0.0 {
            *w = 0.0;
        }
    }
    Ok(())
}

/// Symmetric PSD square root via eigen-decomposition.
pub fn psd_sqrt(s: &Matrix) -> Result<Matrix> {
    let mut evd = sym_eigendecomposition(s)?;
    clip_psd(&mut evd.eigenvalues)?;
    Ok(evd.reconstruct_with(f64::sqrt))
}

/// `Tr((S1 S2)^(1/2))` for symmetric PSD `S1`, `S2`.
///
/// Evaluated as the sum of square roots of the eigenvalues of the symmetric
/// matrix `S1^(1/2) S2 S1^(1/2)`, which is similar to `S1 S2`.
pub fn trace_sqrt_product(s1: &Matrix, s2: &Matrix) -> Result<f64> {
    if s1.rows != s2.rows || s1.cols != s2.cols {
        return Err(MetricsError::Shape(format!(
            "covariance shapes differ: {}x{} vs {}x{}",
            s1.rows, s1.cols, s2.rows, s2.cols
        )));
    }
    check_symmetric(s2)?;
    let root = psd_sqrt(s1)?;
    let mut inner = root.matmul(s2)?.matmul(&root)?;
    inner.symmetrize();
    let mut w = sym_eigenvalues(&inner)?;
    clip_psd(&mut w)?;
    Ok(w.iter().map(|v| v.sqrt()).sum())
}

/// Cholesky factor `L` (lower triangular, `A = L L^T`) of a symmetric matrix,
/// or `None` when `A` is not numerically positive definite.
pub(crate) fn cholesky_lower(a: &Matrix) -> Option<Mat<f64>> {
    let llt = a.view().llt(Side::Lower).ok()?;
    Some(llt.L().to_owned())
}

/// Solves `L X = B` in place for lower-triangular `L`.
pub(crate) fn solve_lower_in_place(l: MatRef<'_, f64>, rhs: faer::MatMut<'_, f64>) {
    faer::linalg::triangular_solve::solve_lower_triangular_in_place(l, rhs, Par::Seq);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn rejects_bad_length_and_non_finite() {
        assert!(matches!(
            Matrix::new(2, 2, vec![1.0; 3]),
            Err(MetricsError::Shape(_))
        ));
        assert!(matches!(
            Matrix::new(1, 2, vec![1.0, f64::NAN]),
            Err(MetricsError::InvalidData(_))
        ));
    }

    #[test]
    fn identity_eigenvalues() {
        let evd = sym_eigendecomposition(&Matrix::identity(3)).unwrap();
        for w in evd.eigenvalues {
            assert!((w - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn diagonal_eigen_is_axis_aligned() {
        let a = Matrix::from_diagonal(&[9.0, 4.0]).unwrap();
        let evd = sym_eigendecomposition(&a).unwrap();
        assert!((evd.eigenvalues[0] - 4.0).abs() < 1e-14);
        assert!((evd.eigenvalues[1] - 9.0).abs() < 1e-14);
        // eigenvalue 4 belongs to the second axis
        assert!(evd.eigenvectors.get(0, 0).abs() < 1e-14);
        assert!((evd.eigenvectors.get(1, 0).abs() - 1.0).abs() < 1e-14);
        assert!((evd.eigenvectors.get(0, 1).abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn non_symmetric_is_shape_error() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(
            sym_eigendecomposition(&a),
            Err(MetricsError::Shape(_))
        ));
        let rect = Matrix::zeros(2, 3);
        assert!(matches!(
            sym_eigendecomposition(&rect),
            Err(MetricsError::Shape(_))
        ));
    }

    #[test]
    fn trace_sqrt_identity_and_diagonal() {
        let i3 = Matrix::identity(3);
        assert!(rel_close(trace_sqrt_product(&i3, &i3).unwrap(), 3.0, 1e-12));
        let s1 = Matrix::from_diagonal(&[1.0, 4.0]).unwrap();
        let s2 = Matrix::from_diagonal(&[9.0, 16.0]).unwrap();
        assert!(rel_close(trace_sqrt_product(&s1, &s2).unwrap(), 11.0, 1e-12));
    }

    #[test]
    fn trace_sqrt_rank_deficient_and_not_psd() {
        let zero = Matrix::zeros(2, 2);
        let s = Matrix::from_diagonal(&[2.0, 3.0]).unwrap();
        assert_eq!(trace_sqrt_product(&zero, &s).unwrap(), 0.0);
        let bad = Matrix::from_diagonal(&[1.0, -0.5]).unwrap();
        assert!(matches!(
            trace_sqrt_product(&bad, &s),
            Err(MetricsError::NotPsd { .. })
        ));
        // negative eigenvalue of S2 surfaces through the congruence with a full-rank S1
        assert!(matches!(
            trace_sqrt_product(&s, &bad),
            Err(MetricsError::NotPsd { .. })
        ));
    }

    #[test]
    fn tiny_negative_eigenvalues_are_clipped() {
        let s = Matrix::from_diagonal(&[1.0, -1e-12]).unwrap();
        let v = trace_sqrt_product(&s, &s).unwrap();
        assert!(rel_close(v, 1.0, 1e-12));
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let s = Matrix::from_rows(&[[4.0, 1.0], [1.0, 3.0]]).unwrap();
        let r = psd_sqrt(&s).unwrap();
        let back = r.matmul(&r).unwrap();
        for (a, b) in back.as_slice().iter().zip(s.as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
