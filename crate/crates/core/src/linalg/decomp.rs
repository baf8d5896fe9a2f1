//! Small dense factorizations: Cholesky and Householder QR.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Lower Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky<T: Scalar>(a: &Matrix<T>) -> Result<Matrix<T>> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::Dimension(format!("cholesky of {}x{}", a.rows(), a.cols())));
    }
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a.get(j, j);
        for p in 0..j {
            d -= l.get(j, p) * l.get(j, p);
        }
        if !(d > T::zero()) {
            return Err(Error::DegenerateFactor(format!(
                "matrix is not positive definite at pivot {}",
                j
            )));
        }
        let d = d.sqrt();
        l.set(j, j, d);
        for i in (j + 1)..n {
            let mut s = a.get(i, j);
            for p in 0..j {
                s -= l.get(i, p) * l.get(j, p);
            }
            l.set(i, j, s / d);
        }
    }
    Ok(l)
}

/// Solves `(L Lᵀ) X = B` given the lower Cholesky factor `L`.
pub fn cholesky_solve<T: Scalar>(l: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    let n = l.rows();
    if b.rows() != n {
        return Err(Error::Dimension(format!(
            "cholesky_solve: factor {}x{}, rhs {}x{}",
            n,
            n,
            b.rows(),
            b.cols()
        )));
    }
    let mut x = b.clone();
    for c in 0..b.cols() {
        for i in 0..n {
            let mut s = x.get(i, c);
            for p in 0..i {
                s -= l.get(i, p) * x.get(p, c);
            }
            x.set(i, c, s / l.get(i, i));
        }
        for i in (0..n).rev() {
            let mut s = x.get(i, c);
            for p in (i + 1)..n {
                s -= l.get(p, i) * x.get(p, c);
            }
            x.set(i, c, s / l.get(i, i));
        }
    }
    Ok(x)
}

/// Householder QR of a square matrix, returning the explicit orthogonal
/// factor `Q` and the diagonal of `R`.
pub fn qr_square<T: Scalar>(a: &Matrix<T>) -> Result<(Matrix<T>, Vec<T>)> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::Dimension(format!("qr_square of {}x{}", a.rows(), a.cols())));
    }
    let mut r = a.clone();
    let mut reflectors: Vec<Vec<T>> = Vec::with_capacity(n);
    let mut rdiag = vec![T::zero(); n];
    for k in 0..n {
        let norm = (k..n).map(|i| r.get(i, k) * r.get(i, k)).sum::<T>().sqrt();
        let mut vk = vec![T::zero(); n];
        if norm == T::zero() {
            reflectors.push(vk);
            rdiag[k] = T::zero();
            continue;
        }
        let alpha = if r.get(k, k) > T::zero() { -norm } else { norm };
        for i in k..n {
            vk[i] = r.get(i, k);
        }
        vk[k] -= alpha;
        let vnorm_sq: T = vk[k..].iter().map(|&x| x * x).sum();
        if vnorm_sq > T::zero() {
            for j in k..n {
                let dot: T = (k..n).map(|i| vk[i] * r.get(i, j)).sum();
                let f = T::of(2.0) * dot / vnorm_sq;
                for i in k..n {
                    let val = r.get(i, j) - f * vk[i];
                    r.set(i, j, val);
                }
            }
        }
        rdiag[k] = r.get(k, k);
        reflectors.push(vk);
    }
    // Q = H_0 H_1 ... H_{n-1}; apply in reverse to the identity.
    let mut q = Matrix::identity(n);
    for k in (0..n).rev() {
        let vk = &reflectors[k];
        let vnorm_sq: T = vk[k..].iter().map(|&x| x * x).sum();
        if vnorm_sq == T::zero() {
            continue;
        }
        for j in 0..n {
            let dot: T = (k..n).map(|i| vk[i] * q.get(i, j)).sum();
            let f = T::of(2.0) * dot / vnorm_sq;
            for i in k..n {
                let val = q.get(i, j) - f * vk[i];
                q.set(i, j, val);
            }
        }
    }
    Ok((q, rdiag))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_solves_spd_system() {
        let a = Matrix::from_rows(&[[4.0, 2.0], [2.0, 3.0]]).unwrap();
        let l = cholesky(&a).unwrap();
        let b = Matrix::from_rows(&[[2.0], [1.0]]).unwrap();
        let x = cholesky_solve(&l, &b).unwrap();
        let ax = a.matmul(&x).unwrap();
        assert!(ax.sub(&b).unwrap().max_abs() < 1e-14);
        let singular = Matrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap();
        assert!(matches!(cholesky(&singular), Err(Error::DegenerateFactor(_))));
    }

    #[test]
    fn qr_reproduces_input() {
        let a = Matrix::from_rows(&[[1.0f64, 2.0, 0.0], [3.0, -1.0, 2.0], [0.5, 0.0, 1.0]]).unwrap();
        let (q, rd) = qr_square(&a).unwrap();
        let qtq = q.t_matmul(&q).unwrap();
        assert!(qtq.sub(&Matrix::identity(3)).unwrap().frob_norm() < 1e-13);
        let r = q.t_matmul(&a).unwrap();
        for i in 0..3 {
            assert!((r.get(i, i) - rd[i]).abs() < 1e-12);
            for j in 0..i {
                assert!(r.get(i, j).abs() < 1e-12);
            }
        }
    }
}
