//! Moore–Penrose pseudoinverses.

use super::decomp::{cholesky, cholesky_solve};
use super::svd::svd;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Default relative cutoff `max(m, n) * ε` for treating a singular value as zero.
pub fn default_pinv_tol<T: Scalar>(rows: usize, cols: usize) -> T {
    T::of_usize(rows.max(cols).max(1)) * T::epsilon()
}

/// Pseudoinverse `V diag(σ⁺) Uᵀ`, where singular values at or below
/// `tol * σ₁` are inverted to zero.
pub fn pinv<T: Scalar>(x: &Matrix<T>, tol: T) -> Result<Matrix<T>> {
    if tol < T::zero() || !tol.is_finite() {
        return Err(Error::InvalidArgument(format!("pinv tolerance must be >= 0, got {}", tol)));
    }
    let f = svd(x)?;
    f.truncated_pinv(f.len(), tol)
}

/// [`pinv`] with [`default_pinv_tol`].
pub fn pinv_default<T: Scalar>(x: &Matrix<T>) -> Result<Matrix<T>> {
    pinv(x, default_pinv_tol(x.rows(), x.cols()))
}

/// Pseudoinverse of `L R` through the reverse-order law
/// `(LR)⁺ = Rᵀ (R Rᵀ)⁻¹ (Lᵀ L)⁻¹ Lᵀ`, valid when both factors have full rank `k`.
pub fn pinv_macduffee<T: Scalar>(l: &Matrix<T>, r: &Matrix<T>) -> Result<Matrix<T>> {
    let (m, k) = l.shape();
    let n = r.cols();
    if r.rows() != k {
        return Err(Error::Dimension(format!(
            "factors {}x{} and {}x{} do not conform",
            m,
            k,
            r.rows(),
            n
        )));
    }
    if k == 0 {
        return Ok(Matrix::zeros(n, m));
    }
    if k > m || k > n {
        return Err(Error::DegenerateFactor(format!(
            "inner dimension {} exceeds an outer dimension of {}x{}",
            k, m, n
        )));
    }
    check_full_rank(l, "left")?;
    check_full_rank(r, "right")?;
    let ltl = l.t_matmul(l)?;
    let rrt = r.matmul(&r.transpose())?;
    // (LᵀL)⁻¹ Lᵀ, then (RRᵀ)⁻¹ applied on the left, then Rᵀ.
    let left_inv = cholesky_solve(&cholesky(&ltl)?, &l.transpose())?;
    let middle = cholesky_solve(&cholesky(&rrt)?, &left_inv)?;
    r.t_matmul(&middle)
}

fn check_full_rank<T: Scalar>(f: &Matrix<T>, which: &str) -> Result<()> {
    let s = svd(f)?;
    let tol = default_pinv_tol::<T>(f.rows(), f.cols());
    let rank = s.numerical_rank(tol);
    if rank < s.len() {
        return Err(Error::DegenerateFactor(format!(
            "{} factor ({}x{}) has numerical rank {} < {}",
            which,
            f.rows(),
            f.cols(),
            rank,
            s.len()
        )));
    }
    Ok(())
}
