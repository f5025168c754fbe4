//! Small dense helpers over row-major `Vec<f64>` matrices.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Eigenvalues above `-PSD_TOLERANCE` count as non-negative; above it, positive.
pub const PSD_TOLERANCE: f64 = 1e-10;

pub fn to_matrix(m: &[f64], k: usize) -> DMatrix<f64> {
    DMatrix::from_row_slice(k, k, m)
}

pub fn from_matrix(m: &DMatrix<f64>) -> Vec<f64> {
    let k = m.nrows();
    let mut out = Vec::with_capacity(k * k);
    for r in 0..k {
        for c in 0..m.ncols() {
            out.push(m[(r, c)]);
        }
    }
    out
}

/// Sorted eigenvalues of a symmetric matrix.
pub fn eigenvalues(m: &[f64], k: usize) -> Vec<f64> {
    let mut ev: Vec<f64> = to_matrix(m, k).symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn min_eigenvalue(m: &[f64], k: usize) -> f64 {
    eigenvalues(m, k)[0]
}

/// Determinant by LU with full pivoting.
pub fn determinant(m: &[f64], k: usize) -> f64 {
    to_matrix(m, k).full_piv_lu().determinant()
}

/// Inverse of a symmetric positive-definite matrix via Cholesky.
pub fn spd_inverse(m: &[f64], k: usize) -> Result<Vec<f64>> {
    let chol = to_matrix(m, k)
        .cholesky()
        .ok_or_else(|| Error::Numerical("matrix is not positive definite".into()))?;
    Ok(from_matrix(&chol.inverse()))
}

/// Solves `A x = b` for symmetric positive-definite `A`.
pub fn spd_solve(a: &[f64], b: &[f64], k: usize) -> Option<Vec<f64>> {
    let chol = to_matrix(a, k).cholesky()?;
    let x = chol.solve(&nalgebra::DVector::from_column_slice(b));
    Some(x.iter().copied().collect())
}

/// Symmetric square root `M^{1/2}` of a positive semi-definite matrix.
pub fn spd_sqrt(m: &[f64], k: usize) -> Vec<f64> {
    let eig = to_matrix(m, k).symmetric_eigen();
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|x| x.max(0.0).sqrt()));
    from_matrix(&(&eig.eigenvectors * d * eig.eigenvectors.transpose()))
}

/// Inverse symmetric square root `M^{-1/2}` of a positive-definite matrix.
pub fn spd_inv_sqrt(m: &[f64], k: usize) -> Result<Vec<f64>> {
    let eig = to_matrix(m, k).symmetric_eigen();
    if eig.eigenvalues.iter().any(|&x| x <= 0.0) {
        return Err(Error::Numerical("matrix is not positive definite".into()));
    }
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|x| x.sqrt().recip()));
    Ok(from_matrix(&(&eig.eigenvectors * d * eig.eigenvectors.transpose())))
}

pub fn frobenius(m: &[f64]) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_and_sqrt() {
        let a = [4.0, 1.0, 1.0, 3.0];
        let inv = spd_inverse(&a, 2).unwrap();
        let det = determinant(&a, 2);
        assert!((inv[0] - 3.0 / det).abs() < 1e-15);
        let r = spd_sqrt(&a, 2);
        let back = [
            r[0] * r[0] + r[1] * r[2],
            r[0] * r[1] + r[1] * r[3],
            r[2] * r[0] + r[3] * r[2],
            r[2] * r[1] + r[3] * r[3],
        ];
        for (x, y) in back.iter().zip(&a) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(spd_inverse(&[1.0, 2.0, 2.0, 1.0], 2).is_err());
        assert_eq!(eigenvalues(&[2.0, 0.0, 0.0, -1.0], 2), vec![-1.0, 2.0]);
    }
}
