//! Small dense complex linear algebra on top of nalgebra.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::channel::CMatrix;
use crate::{Error, Result};

pub type CVector = DVector<Complex64>;

/// Solves `A x = b` for Hermitian positive-definite `A`.
pub fn solve_hpd(a: &CMatrix, b: &CVector) -> Result<CVector> {
    let chol = Cholesky::new(a.clone())
        .ok_or_else(|| Error::DegenerateChannel("covariance is not positive definite".into()))?;
    Ok(chol.solve(b))
}

/// Largest deviation of `A` from Hermitian symmetry.
pub fn hermitian_defect(a: &CMatrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `A^{-1/2}` for Hermitian positive-definite `A`, via eigendecomposition.
pub fn inv_sqrt_hpd(a: &CMatrix) -> Result<CMatrix> {
    let defect = hermitian_defect(a);
    if defect > 1e-8 * (1.0 + a.norm()) {
        return Err(Error::Consistency(format!(
            "matrix drifted from Hermitian by {defect:e}"
        )));
    }
    let eig = SymmetricEigen::new(a.clone());
    if eig.eigenvalues.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::Numeric("matrix is not positive definite".into()));
    }
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| Complex64::new(l.powf(-0.5), 0.0)));
    Ok(&eig.eigenvectors * d * eig.eigenvectors.adjoint())
}

/// Compact SVD `H = U diag(s) V^*` with singular values sorted descending.
pub struct CompactSvd {
    pub u: CMatrix,
    pub singular_values: Vec<f64>,
    pub v: CMatrix,
}

pub fn compact_svd(h: &CMatrix) -> Result<CompactSvd> {
    let svd = nalgebra::SVD::new(h.clone(), true, true);
    let u = svd.u.ok_or_else(|| Error::Numeric("SVD did not return U".into()))?;
    let v_t = svd.v_t.ok_or_else(|| Error::Numeric("SVD did not return V".into()))?;
    let m = svd.singular_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let v = v_t.adjoint();
    let mut u_sorted = CMatrix::zeros(u.nrows(), m);
    let mut v_sorted = CMatrix::zeros(v.nrows(), m);
    for (dst, &src) in order.iter().enumerate() {
        u_sorted.set_column(dst, &u.column(src));
        v_sorted.set_column(dst, &v.column(src));
    }
    Ok(CompactSvd {
        u: u_sorted,
        singular_values: order.iter().map(|&i| svd.singular_values[i]).collect(),
        v: v_sorted,
    })
}
