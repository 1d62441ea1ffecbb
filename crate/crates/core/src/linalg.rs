//! Dense linear-algebra helpers shared by the cost models and the oracles.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};

/// Absolute tolerance used when checking that a matrix is symmetric.
pub const SYMMETRY_TOL: f64 = 1e-10;

pub(crate) fn check_square(m: &DMatrix<f64>, context: &'static str) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            context,
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    Ok(m.nrows())
}

pub(crate) fn check_len(v: &DVector<f64>, n: usize, context: &'static str) -> Result<()> {
    if v.len() != n {
        return Err(Error::DimensionMismatch {
            context,
            expected: n,
            found: v.len(),
        });
    }
    Ok(())
}

/// Largest absolute entry of `m - mᵀ`, scaled by `1 + max|m|`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let scale = 1.0 + m.amax();
    (m - m.transpose()).amax() / scale
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Extreme eigenvalues `(λ_min, λ_max)` of a symmetric matrix.
pub fn extreme_eigenvalues(m: &DMatrix<f64>) -> (f64, f64) {
    let eig = SymmetricEigen::new(symmetrize(m));
    let lo = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Cholesky factorization of a symmetric positive-definite matrix.
pub fn cholesky(m: DMatrix<f64>, factorization: &'static str) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(m).ok_or(Error::Singular { factorization })
}

/// Solves `m y = rhs` for a symmetric positive-definite `m`.
pub fn solve_spd(m: DMatrix<f64>, rhs: &DVector<f64>, factorization: &'static str) -> Result<DVector<f64>> {
    Ok(cholesky(m, factorization)?.solve(rhs))
}

/// Solves the equality-constrained quadratic program
/// `min ½ yᵀQy + qᵀy  s.t.  Ay = b` through one dense KKT solve.
///
/// An `A` with zero rows reduces to `y = −Q⁻¹q`.
pub fn solve_kkt(
    q_mat: &DMatrix<f64>,
    q_vec: &DVector<f64>,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
) -> Result<DVector<f64>> {
    let n = check_square(q_mat, "KKT Hessian")?;
    check_len(q_vec, n, "KKT linear term")?;
    let p = a.nrows();
    if p > 0 && a.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "KKT constraint matrix",
            expected: n,
            found: a.ncols(),
        });
    }
    check_len(b, p, "KKT right-hand side")?;

    let mut kkt = DMatrix::zeros(n + p, n + p);
    kkt.view_mut((0, 0), (n, n)).copy_from(q_mat);
    if p > 0 {
        kkt.view_mut((n, 0), (p, n)).copy_from(a);
        kkt.view_mut((0, n), (n, p)).copy_from(&a.transpose());
    }
    let mut rhs = DVector::zeros(n + p);
    rhs.rows_mut(0, n).copy_from(&(-q_vec));
    rhs.rows_mut(n, p).copy_from(b);

    let lu = kkt.clone().lu();
    let sol = lu.solve(&rhs).ok_or(Error::Singular {
        factorization: "KKT matrix [[Q, Aᵀ], [A, 0]]",
    })?;
    // LU on a numerically singular matrix can return garbage instead of None.
    let residual = (&kkt * &sol - &rhs).norm();
    if !residual.is_finite() || residual > 1e-8 * (1.0 + rhs.norm()) * (1.0 + kkt.amax()) {
        return Err(Error::Singular {
            factorization: "KKT matrix [[Q, Aᵀ], [A, 0]]",
        });
    }
    Ok(sol.rows(0, n).into_owned())
}
