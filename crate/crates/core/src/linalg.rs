//! Small dense helpers on top of nalgebra: symmetric spectra, definiteness
//! tests and the symmetric-definite generalized eigenproblem.

use nalgebra::{DMatrix, DVector};

/// Tolerance on the smallest eigenvalue when deciding definiteness.
pub const DEFINITENESS_TOL: f64 = 1e-9;

/// Symmetric part `(m + mᵀ) / 2`.
pub fn symmetric_part(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Eigenvalues of the symmetric part of `m`, ascending.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let eig = symmetric_part(m).symmetric_eigen();
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

pub fn lambda_max(m: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(m).last().copied().unwrap_or(f64::NAN)
}

pub fn lambda_min(m: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(m).first().copied().unwrap_or(f64::NAN)
}

pub fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    m.is_square() && (m - m.transpose()).amax() <= tol * (1.0 + m.amax())
}

/// Symmetric with smallest eigenvalue above [`DEFINITENESS_TOL`].
pub fn is_positive_definite(m: &DMatrix<f64>) -> bool {
    is_symmetric(m, 1e-12) && lambda_min(m) > DEFINITENESS_TOL
}

/// Largest generalized eigenvalue of the pencil `(a, b)` with `a` symmetric
/// and `b` symmetric positive definite, i.e. the smallest `c` such that
/// `xᵀ a x ≤ c · xᵀ b x` for all `x`.
///
/// Reduced to a standard problem through the Cholesky factor `b = L Lᵀ`.
/// Returns `None` when `b` is not positive definite.
pub fn generalized_lambda_max(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Option<f64> {
    let chol = b.clone().cholesky()?;
    let l = chol.l();
    let l_inv = l.clone().try_inverse()?;
    let reduced = &l_inv * symmetric_part(a) * l_inv.transpose();
    Some(lambda_max(&reduced))
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// Dense matrix from row-major nested vectors. Rows must have equal length.
pub fn from_rows(rows: &[Vec<f64>]) -> Option<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return None;
    }
    Some(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

pub fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// `out = m · x` on raw slices; `m` is square of size `x.len()`.
#[inline]
pub fn mat_vec_add(m: &DMatrix<f64>, x: &[f64], scale: f64, out: &mut [f64]) {
    let n = x.len();
    for (r, o) in out.iter_mut().enumerate().take(n) {
        let mut acc = 0.0;
        for (c, xc) in x.iter().enumerate() {
            acc += m[(r, c)] * xc;
        }
        *o += scale * acc;
    }
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn quad_form(m: &DMatrix<f64>, x: &[f64]) -> f64 {
    let v = DVector::from_column_slice(x);
    (v.transpose() * m * &v)[(0, 0)]
}
