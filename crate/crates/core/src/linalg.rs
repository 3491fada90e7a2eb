//! Small dense linear-algebra helpers shared by the solvers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Relative tolerance for positive semidefiniteness of weight matrices.
pub const PSD_REL_TOL: f64 = 1e-10;
/// Relative tolerance for positive definiteness of control weights.
pub const PD_REL_TOL: f64 = 1e-12;
/// Condition number above which a linear system is treated as singular.
pub const SINGULAR_CONDITION: f64 = 1e12;

/// Returns `(P + Pᵀ)/2`.
pub fn symmetrize(p: &Mat) -> Result<Mat> {
    if !p.is_square() {
        return Err(Error::dim(
            "symmetrize",
            "square matrix",
            format!("{}x{}", p.nrows(), p.ncols()),
        ));
    }
    Ok(symmetrize_unchecked(p))
}

pub(crate) fn symmetrize_unchecked(p: &Mat) -> Mat {
    (p + p.transpose()) * 0.5
}

/// Largest absolute entry.
pub fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub fn max_abs_diff(a: &Mat, b: &Mat) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs()))
}

/// Spectral norm (largest singular value).
pub fn spectral_norm(m: &Mat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(0.0_f64, |acc, &s| acc.max(s))
}

/// Eigenvalues of the symmetric part of `m`.
pub fn symmetric_eigenvalues(m: &Mat) -> Vector {
    SymmetricEigen::new(symmetrize_unchecked(m)).eigenvalues
}

pub fn min_symmetric_eigenvalue(m: &Mat) -> f64 {
    symmetric_eigenvalues(m)
        .iter()
        .fold(f64::INFINITY, |acc, &v| acc.min(v))
}

/// `λ_min ≥ −1e−10·‖M‖`.
pub fn is_psd(m: &Mat) -> bool {
    if m.is_empty() {
        return true;
    }
    let tol = PSD_REL_TOL * spectral_norm(m);
    min_symmetric_eigenvalue(m) >= -tol
}

/// `λ_min > 1e−12·max(1, ‖M‖)`.
pub fn is_pd(m: &Mat) -> bool {
    if m.is_empty() {
        return false;
    }
    let tol = PD_REL_TOL * spectral_norm(m).max(1.0);
    min_symmetric_eigenvalue(m) > tol
}

/// 2-norm condition number; infinite for singular or empty-rank matrices.
pub fn condition_number(m: &Mat) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().fold(0.0_f64, |a, &s| a.max(s));
    let min = sv.iter().fold(f64::INFINITY, |a, &s| a.min(s));
    if max == 0.0 || min == 0.0 || !min.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Numerical rank with tolerance `max(rows, cols)·ε·σ_max`.
pub fn numerical_rank(m: &Mat, dim_scale: usize) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().fold(0.0_f64, |a, &s| a.max(s));
    if max == 0.0 {
        return 0;
    }
    let tol = dim_scale as f64 * f64::EPSILON * max;
    sv.iter().filter(|&&s| s > tol).count()
}

/// Solves `M X = RHS` by LU, failing when `M` is numerically singular.
pub(crate) fn solve(m: &Mat, rhs: &Mat) -> Option<Mat> {
    m.clone().lu().solve(rhs)
}

/// Symmetric positive-definite inverse square root via eigendecomposition.
pub fn sym_inv_sqrt(m: &Mat) -> Result<Mat> {
    let eig = SymmetricEigen::new(symmetrize_unchecked(m));
    if eig.eigenvalues.iter().any(|&v| v <= 0.0) {
        return Err(Error::InternalConsistency(
            "inverse square root of a matrix that is not positive definite".into(),
        ));
    }
    let d = Mat::from_diagonal(&eig.eigenvalues.map(|v| 1.0 / v.sqrt()));
    Ok(&eig.eigenvectors * d * eig.eigenvectors.transpose())
}

/// `vᵀ M v`.
pub(crate) fn quad_form(m: &Mat, v: &Vector) -> f64 {
    v.dot(&(m * v))
}

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

pub(crate) fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = CompensatedSum::default();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Builds a dense matrix from row-major nested rows.
pub fn from_rows(rows: &[Vec<f64>]) -> Result<Mat> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().find(|r| r.len() != ncols) {
        return Err(Error::dim("matrix rows", ncols, bad.len()));
    }
    Ok(Mat::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

/// Row-major nested rows of a dense matrix.
pub fn to_rows(m: &Mat) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}
