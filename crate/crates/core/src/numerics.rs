//! Dense matrix primitives with an explicit tolerance policy.
//!
//! Everything here works on `nalgebra::DMatrix<f64>`. Singular values and
//! symmetric eigendecompositions are computed in full; the problem sizes
//! this crate targets (ambient dimension up to a few hundred) do not call
//! for iterative solvers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Thresholds used across the crate.
///
/// `rank_tol` is relative: a singular value `s` of an `m × n` input is treated
/// as zero when `s <= rank_tol * max(m, n) * s_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TolerancePolicy {
    pub rank_tol: f64,
    pub eig_tol: f64,
    pub check_tol: f64,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        Self {
            rank_tol: f64::EPSILON,
            eig_tol: 1e-8,
            check_tol: 1e-8,
        }
    }
}

impl TolerancePolicy {
    pub fn new(rank_tol: f64, eig_tol: f64, check_tol: f64) -> Result<Self> {
        for (name, v) in [
            ("rank_tol", rank_tol),
            ("eig_tol", eig_tol),
            ("check_tol", check_tol),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must lie in (0, 1), got {v}"
                )));
            }
        }
        Ok(Self {
            rank_tol,
            eig_tol,
            check_tol,
        })
    }
}

pub fn ensure_finite(a: &Matrix) -> Result<()> {
    if a.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

/// Builds a `dim × vectors.len()` matrix whose columns are `vectors`.
pub fn columns_from_vectors(dim: usize, vectors: &[Vec<f64>]) -> Result<Matrix> {
    for v in vectors {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: v.len(),
            });
        }
    }
    let a = Matrix::from_fn(dim, vectors.len(), |i, j| vectors[j][i]);
    ensure_finite(&a)?;
    Ok(a)
}

/// Orthonormal basis of the span of `vectors`, each of length `dim`.
///
/// The number of returned columns is the numerical rank of the input. An
/// empty list, or a list of zero vectors, yields a `dim × 0` matrix.
pub fn orthonormalize(dim: usize, vectors: &[Vec<f64>], tol: &TolerancePolicy) -> Result<Matrix> {
    if dim == 0 {
        return Err(Error::InvalidParameter(
            "ambient dimension must be at least 1".into(),
        ));
    }
    let a = columns_from_vectors(dim, vectors)?;
    Ok(column_space(&a, tol))
}

/// Singular values of `a` in decreasing order, with the matching left
/// singular vectors for the leading `want` of them.
///
/// Uses the symmetric eigendecomposition of `[[0, A], [Aᵀ, 0]]`, whose
/// eigenvalues are `±σ_i` padded with zeros. nalgebra's bidiagonal SVD
/// can return wrong factors for rank-deficient inputs, while its symmetric
/// eigensolver does not have that problem.
fn singular_decomposition(a: &Matrix, want: usize) -> (Vec<f64>, Matrix) {
    let (m, n) = a.shape();
    let p = m.min(n);
    let mut h = Matrix::zeros(m + n, m + n);
    h.view_mut((0, m), (m, n)).copy_from(a);
    h.view_mut((m, 0), (n, m)).copy_from(&a.transpose());
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..m + n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values: Vec<f64> = order[..p].iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let want = want.min(p);
    let u = Matrix::from_fn(m, want, |r, c| eig.eigenvectors[(r, order[c])]);
    let u = if want == 0 { u } else { u.qr().q() };
    (values, u)
}

/// Orthonormal basis of the column space of `a`.
pub fn column_space(a: &Matrix, tol: &TolerancePolicy) -> Matrix {
    let (rows, cols) = a.shape();
    if cols == 0 || rows == 0 {
        return Matrix::zeros(rows, 0);
    }
    let (values, _) = singular_decomposition(a, 0);
    let s_max = values[0];
    if s_max == 0.0 {
        return Matrix::zeros(rows, 0);
    }
    let cutoff = tol.rank_tol * rows.max(cols) as f64 * s_max;
    let rank = values.iter().filter(|&&s| s > cutoff).count();
    singular_decomposition(a, rank).1
}

/// The `k` dominant left singular vectors of `a` (k must not exceed the
/// rank of `a`).
pub fn dominant_left_singular_vectors(a: &Matrix, k: usize) -> Matrix {
    let (rows, cols) = a.shape();
    if k == 0 || cols == 0 {
        return Matrix::zeros(rows, 0);
    }
    singular_decomposition(a, k).1
}

fn select_columns(a: &Matrix, cols: &[usize]) -> Matrix {
    Matrix::from_fn(a.nrows(), cols.len(), |i, j| a[(i, cols[j])])
}

/// Largest singular value.
pub fn operator_norm(a: &Matrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    // the largest eigenvalue of the smaller Gram matrix is accurate to
    // relative precision, which is all a norm needs
    let gram = if a.nrows() < a.ncols() {
        a * a.transpose()
    } else {
        a.transpose() * a
    };
    gram.symmetric_eigenvalues().max().max(0.0).sqrt()
}

/// Smallest singular value of `a` (the full min over `min(rows, cols)`
/// singular values).
pub fn min_singular(a: &Matrix) -> f64 {
    if a.is_empty() {
        return f64::INFINITY;
    }
    let (values, _) = singular_decomposition(a, 0);
    values[values.len() - 1]
}

/// `min { ‖A y‖ : y ∈ span(B), ‖y‖ = 1 }` for an orthonormal `B`.
///
/// Returns `f64::INFINITY` when `B` has no columns (empty domain).
pub fn restricted_min_singular(a: &Matrix, b: &Matrix) -> Result<f64> {
    if a.ncols() != b.nrows() {
        return Err(Error::DimensionMismatch {
            expected: a.ncols(),
            found: b.nrows(),
        });
    }
    if b.ncols() == 0 {
        return Ok(f64::INFINITY);
    }
    let ab = a * b;
    if ab.nrows() < ab.ncols() {
        // nontrivial kernel inside span(B)
        return Ok(0.0);
    }
    Ok(min_singular(&ab))
}

/// Operator norm of `S - Sᵀ`.
pub fn asymmetry(s: &Matrix) -> f64 {
    operator_norm(&(s - s.transpose()))
}

/// `‖BᵀB - I‖`.
pub fn orthonormality_defect(b: &Matrix) -> f64 {
    if b.ncols() == 0 {
        return 0.0;
    }
    let k = b.ncols();
    operator_norm(&(b.transpose() * b - Matrix::identity(k, k)))
}

fn symmetric_eigen(s: &Matrix, tol: &TolerancePolicy) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    if !s.is_square() {
        return Err(Error::DimensionMismatch {
            expected: s.nrows(),
            found: s.ncols(),
        });
    }
    ensure_finite(s)?;
    let skew = asymmetry(s);
    if skew > tol.check_tol {
        return Err(Error::NotSymmetric(skew));
    }
    // symmetrize so roundoff asymmetry below the tolerance cannot leak in
    let sym = (s + s.transpose()) * 0.5;
    Ok(sym.symmetric_eigen())
}

/// Orthonormal basis of the eigenvectors of the symmetric matrix `s` whose
/// eigenvalues lie within `eig_tol` of `target`.
pub fn principal_eigenspace(s: &Matrix, target: f64, tol: &TolerancePolicy) -> Result<Matrix> {
    let eig = symmetric_eigen(s, tol)?;
    let keep: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&i| (eig.eigenvalues[i] - target).abs() <= tol.eig_tol)
        .collect();
    Ok(select_columns(&eig.eigenvectors, &keep))
}

/// Eigenvectors of the `k` largest eigenvalues of a symmetric matrix.
pub fn top_eigenvectors(s: &Matrix, k: usize, tol: &TolerancePolicy) -> Result<Matrix> {
    let eig = symmetric_eigen(s, tol)?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    order.truncate(k);
    Ok(select_columns(&eig.eigenvectors, &order))
}
