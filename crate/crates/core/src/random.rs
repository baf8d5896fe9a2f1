//! Seeded random matrices.

use crate::linalg::qr_square;
use crate::matrix::Matrix;
use crate::rng::Rng;
use crate::scalar::Scalar;

/// `m x n` matrix of i.i.d. standard normal entries, drawn row by row.
pub fn sample_gaussian<T: Scalar>(m: usize, n: usize, rng: &mut Rng) -> Matrix<T> {
    Matrix::from_fn(m, n, |_, _| T::of(rng.standard_normal()))
}

/// `m x n` matrix of i.i.d. uniform `[0, 1)` entries.
pub fn sample_uniform<T: Scalar>(m: usize, n: usize, rng: &mut Rng) -> Matrix<T> {
    Matrix::from_fn(m, n, |_, _| T::of(rng.uniform()))
}

/// Haar-distributed orthogonal `n x n` matrix: QR of a Gaussian matrix with
/// each column of `Q` multiplied by the sign of the matching `R` diagonal.
pub fn random_orthogonal<T: Scalar>(n: usize, rng: &mut Rng) -> Matrix<T> {
    let g = sample_gaussian::<T>(n, n, rng);
    let (mut q, rdiag) = qr_square(&g).expect("square input");
    for (j, &d) in rdiag.iter().enumerate() {
        if d < T::zero() {
            for i in 0..n {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

/// Independent Haar rotations `(O_L, O_R)` of sizes `m` and `n`. Conjugating
/// `O_L X O_Rᵀ` keeps the singular values of `X` while spreading sparse
/// singular vectors across all rows and columns.
pub fn random_rotation_pair<T: Scalar>(m: usize, n: usize, rng: &mut Rng) -> (Matrix<T>, Matrix<T>) {
    let left = random_orthogonal(m, rng);
    let right = random_orthogonal(n, rng);
    (left, right)
}

/// Applies `O_L X O_Rᵀ`.
pub fn rotate<T: Scalar>(x: &Matrix<T>, left: &Matrix<T>, right: &Matrix<T>) -> crate::Result<Matrix<T>> {
    left.matmul(x)?.matmul(&right.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::svd;

    #[test]
    fn gaussian_is_deterministic_per_seed() {
        let a: Matrix<f64> = sample_gaussian(4, 5, &mut Rng::new(3));
        let b: Matrix<f64> = sample_gaussian(4, 5, &mut Rng::new(3));
        let c: Matrix<f64> = sample_gaussian(4, 5, &mut Rng::new(4));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn gaussian_moments_at_500x500() {
        let x: Matrix<f64> = sample_gaussian(500, 500, &mut Rng::new(11));
        let n = 250_000.0;
        let mean = x.as_slice().iter().sum::<f64>() / n;
        let var = x.as_slice().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() <= 4.0 / n.sqrt());
        assert!((var - 1.0).abs() <= 0.02);
    }

    #[test]
    fn rotations_are_orthogonal_and_preserve_spectrum() {
        let mut rng = Rng::new(5);
        let (ol, or) = random_rotation_pair::<f64>(4, 4, &mut rng);
        for o in [&ol, &or] {
            let err = o.t_matmul(o).unwrap().sub(&Matrix::identity(4)).unwrap().frob_norm();
            assert!(err <= 1e-10 * 4.0);
        }
        let x = Matrix::from_diag(4, 4, &[5.0, 2.0, 1.0, 0.0]);
        let y = rotate(&x, &ol, &or).unwrap();
        let s = svd(&y).unwrap().sigma;
        for (a, b) in s.iter().zip([5.0, 2.0, 1.0, 0.0]) {
            assert!((a - b).abs() <= 1e-8);
        }
    }

    #[test]
    fn one_by_one_rotation_is_plus_or_minus_one() {
        for seed in 0..20 {
            let (ol, _) = random_rotation_pair::<f64>(1, 3, &mut Rng::new(seed));
            assert!((ol.get(0, 0).abs() - 1.0).abs() < 1e-15);
        }
    }
}
