//! Numerical primitives: SVD, truncation, pseudoinverses, small factorizations.

mod decomp;
mod pinv;
mod svd;

pub use decomp::{cholesky, cholesky_solve, qr_square};
pub use pinv::{default_pinv_tol, pinv, pinv_default, pinv_macduffee};
pub use svd::{svd, SvdFactors};

use crate::error::Result;
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Eckart–Young truncation of precomputed factors to `k` terms.
pub fn truncate_svd<T: Scalar>(f: &SvdFactors<T>, k: usize) -> Result<Matrix<T>> {
    f.truncate(k)
}

/// Sum of squared entries.
pub fn frob_norm_sq<T: Scalar>(x: &Matrix<T>) -> T {
    x.frob_norm_sq()
}
