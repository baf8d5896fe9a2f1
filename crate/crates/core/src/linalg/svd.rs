//! Skinny singular value decomposition.
//!
//! Householder bidiagonalization followed by implicit-shift QR on the
//! bidiagonal (the Golub–Kahan–Reinsch scheme, in the LINPACK/JAMA
//! arrangement). Working arrays are column-major so that the Givens
//! rotations on `U` and `V` touch contiguous memory.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Skinny SVD `X = U diag(sigma) Vᵀ` with `p = min(m, n)` terms.
///
/// `sigma` is nonincreasing and nonnegative. Each column of `U` is signed
/// so that its largest-magnitude entry is positive (first such entry on
/// ties), with the matching column of `V` flipped alongside.
#[derive(Clone, Debug)]
pub struct SvdFactors<T> {
    pub u: Matrix<T>,
    pub sigma: Vec<T>,
    pub v: Matrix<T>,
}

/// Maximum QR sweeps spent on one singular value before giving up.
const MAX_SWEEPS_PER_VALUE: usize = 75;

/// Computes the skinny SVD of `x`.
pub fn svd<T: Scalar>(x: &Matrix<T>) -> Result<SvdFactors<T>> {
    let (m, n) = x.shape();
    if m == 0 || n == 0 {
        return Ok(SvdFactors {
            u: Matrix::zeros(m, 0),
            sigma: Vec::new(),
            v: Matrix::zeros(n, 0),
        });
    }
    if !x.is_finite() {
        return Err(Error::Numerical("svd input contains non-finite entries".into()));
    }
    let mut f = if m >= n {
        let mut a = vec![T::zero(); m * n];
        for i in 0..m {
            for j in 0..n {
                a[j * m + i] = x.get(i, j);
            }
        }
        let (u, s, v) = golub_kahan(a, m, n)?;
        SvdFactors { u: col_major_to_matrix(&u, m, n), sigma: s, v: col_major_to_matrix(&v, n, n) }
    } else {
        // Factor Xᵀ (n x m, tall): Xᵀ = U' S V'ᵀ, so X = V' S U'ᵀ.
        let mut a = vec![T::zero(); m * n];
        for i in 0..m {
            for j in 0..n {
                a[i * n + j] = x.get(i, j);
            }
        }
        let (u, s, v) = golub_kahan(a, n, m)?;
        SvdFactors { u: col_major_to_matrix(&v, m, m), sigma: s, v: col_major_to_matrix(&u, n, m) }
    };
    apply_sign_convention(&mut f);
    Ok(f)
}

fn col_major_to_matrix<T: Scalar>(c: &[T], rows: usize, cols: usize) -> Matrix<T> {
    Matrix::from_fn(rows, cols, |i, j| c[j * rows + i])
}

fn apply_sign_convention<T: Scalar>(f: &mut SvdFactors<T>) {
    let p = f.sigma.len();
    for k in 0..p {
        let mut best = T::zero();
        let mut best_val = T::zero();
        for i in 0..f.u.rows() {
            let val = f.u.get(i, k);
            if val.abs() > best {
                best = val.abs();
                best_val = val;
            }
        }
        if best_val < T::zero() {
            for i in 0..f.u.rows() {
                f.u[(i, k)] = -f.u[(i, k)];
            }
            for i in 0..f.v.rows() {
                f.v[(i, k)] = -f.v[(i, k)];
            }
        }
    }
}

#[inline]
fn hypot<T: Scalar>(a: T, b: T) -> T {
    a.hypot(b)
}

/// Rotates columns `j` and `k` of a column-major matrix with `rows` rows:
/// `col_j <- cs*col_j + sn*col_k`, `col_k <- -sn*col_j + cs*col_k`.
#[inline]
fn rotate_cols<T: Scalar>(a: &mut [T], rows: usize, j: usize, k: usize, cs: T, sn: T) {
    debug_assert_ne!(j, k);
    let (lo, hi) = if j < k { (j, k) } else { (k, j) };
    let (left, right) = a.split_at_mut(hi * rows);
    let col_lo = &mut left[lo * rows..(lo + 1) * rows];
    let col_hi = &mut right[..rows];
    let (cj, ck) = if j < k { (col_lo, col_hi) } else { (col_hi, col_lo) };
    for (x, y) in cj.iter_mut().zip(ck.iter_mut()) {
        let t = cs * *x + sn * *y;
        *y = -sn * *x + cs * *y;
        *x = t;
    }
}

/// Core decomposition for a column-major `m x n` matrix with `m >= n`.
/// Returns column-major `U` (`m x n`), singular values, and `V` (`n x n`).
#[allow(clippy::many_single_char_names, clippy::needless_range_loop)]
fn golub_kahan<T: Scalar>(mut a: Vec<T>, m: usize, n: usize) -> Result<(Vec<T>, Vec<T>, Vec<T>)> {
    debug_assert!(m >= n);
    let zero = T::zero();
    let one = T::one();
    let nu = n;
    let mut s = vec![zero; (m + 1).min(n)];
    let mut u = vec![zero; m * nu];
    let mut v = vec![zero; n * n];
    let mut e = vec![zero; n];
    let mut work = vec![zero; m];

    let idx = |i: usize, j: usize| j * m + i;

    let nct = (m - 1).min(n);
    let nrt = n.saturating_sub(2).min(m);
    for k in 0..nct.max(nrt) {
        if k < nct {
            // Householder for column k; diagonal goes to s[k].
            s[k] = zero;
            for i in k..m {
                s[k] = hypot(s[k], a[idx(i, k)]);
            }
            if s[k] != zero {
                if a[idx(k, k)] < zero {
                    s[k] = -s[k];
                }
                let sk = s[k];
                for i in k..m {
                    a[idx(i, k)] /= sk;
                }
                a[idx(k, k)] += one;
            }
            s[k] = -s[k];
        }
        for j in (k + 1)..n {
            if k < nct && s[k] != zero {
                let mut t = zero;
                for i in k..m {
                    t += a[idx(i, k)] * a[idx(i, j)];
                }
                t = -t / a[idx(k, k)];
                for i in k..m {
                    let aik = a[idx(i, k)];
                    a[idx(i, j)] += t * aik;
                }
            }
            e[j] = a[idx(k, j)];
        }
        if k < nct {
            for i in k..m {
                u[i + k * m] = a[idx(i, k)];
            }
        }
        if k < nrt {
            // Householder for row k; superdiagonal goes to e[k].
            e[k] = zero;
            for i in (k + 1)..n {
                e[k] = hypot(e[k], e[i]);
            }
            if e[k] != zero {
                if e[k + 1] < zero {
                    e[k] = -e[k];
                }
                let ek = e[k];
                for i in (k + 1)..n {
                    e[i] /= ek;
                }
                e[k + 1] += one;
            }
            e[k] = -e[k];
            if k + 1 < m && e[k] != zero {
                for w in work.iter_mut().skip(k + 1) {
                    *w = zero;
                }
                for j in (k + 1)..n {
                    let ej = e[j];
                    for i in (k + 1)..m {
                        work[i] += ej * a[idx(i, j)];
                    }
                }
                for j in (k + 1)..n {
                    let t = -e[j] / e[k + 1];
                    for i in (k + 1)..m {
                        a[idx(i, j)] += t * work[i];
                    }
                }
            }
            for i in (k + 1)..n {
                v[i + k * n] = e[i];
            }
        }
    }

    // Final bidiagonal of order p.
    let mut p = n.min(m + 1);
    if nct < n {
        s[nct] = a[idx(nct, nct)];
    }
    if m < p {
        s[p - 1] = zero;
    }
    if nrt + 1 < p {
        e[nrt] = a[idx(nrt, p - 1)];
    }
    e[p - 1] = zero;

    // Generate U.
    for j in nct..nu {
        for i in 0..m {
            u[i + j * m] = zero;
        }
        u[j + j * m] = one;
    }
    for k in (0..nct).rev() {
        if s[k] != zero {
            for j in (k + 1)..nu {
                let mut t = zero;
                for i in k..m {
                    t += u[i + k * m] * u[i + j * m];
                }
                t = -t / u[k + k * m];
                for i in k..m {
                    let uik = u[i + k * m];
                    u[i + j * m] += t * uik;
                }
            }
            for i in k..m {
                u[i + k * m] = -u[i + k * m];
            }
            u[k + k * m] = one + u[k + k * m];
            for i in 0..k {
                u[i + k * m] = zero;
            }
        } else {
            for i in 0..m {
                u[i + k * m] = zero;
            }
            u[k + k * m] = one;
        }
    }

    // Generate V.
    for k in (0..n).rev() {
        if k < nrt && e[k] != zero {
            for j in (k + 1)..nu {
                let mut t = zero;
                for i in (k + 1)..n {
                    t += v[i + k * n] * v[i + j * n];
                }
                t = -t / v[(k + 1) + k * n];
                for i in (k + 1)..n {
                    let vik = v[i + k * n];
                    v[i + j * n] += t * vik;
                }
            }
        }
        for i in 0..n {
            v[i + k * n] = zero;
        }
        v[k + k * n] = one;
    }

    // Bidiagonal QR iteration.
    let pp = p - 1;
    let mut iter = 0usize;
    let eps = T::epsilon();
    let tiny = T::min_positive_value() / eps;
    while p > 0 {
        if iter > MAX_SWEEPS_PER_VALUE * n.max(1) {
            return Err(Error::Numerical(format!(
                "svd failed to converge after {} QR sweeps",
                iter
            )));
        }
        // Find k: e[k] negligible, or k = -1 (represented as None).
        let mut k: isize = p as isize - 2;
        while k >= 0 {
            let ku = k as usize;
            if e[ku].abs() <= tiny + eps * (s[ku].abs() + s[ku + 1].abs()) {
                e[ku] = zero;
                break;
            }
            k -= 1;
        }
        let kase;
        if k == p as isize - 2 {
            kase = 4;
        } else {
            let mut ks: isize = p as isize - 1;
            while ks > k {
                let ksu = ks as usize;
                let t = (if ksu != p { e[ksu].abs() } else { zero })
                    + (if ks != k + 1 { e[ksu - 1].abs() } else { zero });
                if s[ksu].abs() <= tiny + eps * t {
                    s[ksu] = zero;
                    break;
                }
                ks -= 1;
            }
            if ks == k {
                kase = 3;
            } else if ks == p as isize - 1 {
                kase = 1;
            } else {
                kase = 2;
                k = ks;
            }
        }
        let k = (k + 1) as usize;

        match kase {
            // Deflate negligible s[p-1].
            1 => {
                let mut f = e[p - 2];
                e[p - 2] = zero;
                let mut j = p - 2;
                loop {
                    let t = hypot(s[j], f);
                    let cs = s[j] / t;
                    let sn = f / t;
                    s[j] = t;
                    if j != k {
                        f = -sn * e[j - 1];
                        e[j - 1] = cs * e[j - 1];
                    }
                    rotate_cols(&mut v, n, j, p - 1, cs, sn);
                    if j == k {
                        break;
                    }
                    j -= 1;
                }
            }
            // Split at negligible s[k-1].
            2 => {
                let mut f = e[k - 1];
                e[k - 1] = zero;
                for j in k..p {
                    let t = hypot(s[j], f);
                    let cs = s[j] / t;
                    let sn = f / t;
                    s[j] = t;
                    f = -sn * e[j];
                    e[j] = cs * e[j];
                    rotate_cols(&mut u, m, j, k - 1, cs, sn);
                }
            }
            // One implicit-shift QR step.
            3 => {
                let scale = s[p - 1]
                    .abs()
                    .max(s[p - 2].abs())
                    .max(e[p - 2].abs())
                    .max(s[k].abs())
                    .max(e[k].abs());
                let sp = s[p - 1] / scale;
                let spm1 = s[p - 2] / scale;
                let epm1 = e[p - 2] / scale;
                let sk = s[k] / scale;
                let ek = e[k] / scale;
                let two = T::of(2.0);
                let b = ((spm1 + sp) * (spm1 - sp) + epm1 * epm1) / two;
                let c = (sp * epm1) * (sp * epm1);
                let mut shift = zero;
                if b != zero || c != zero {
                    shift = (b * b + c).sqrt();
                    if b < zero {
                        shift = -shift;
                    }
                    shift = c / (b + shift);
                }
                let mut f = (sk + sp) * (sk - sp) + shift;
                let mut g = sk * ek;
                for j in k..(p - 1) {
                    let mut t = hypot(f, g);
                    let mut cs = f / t;
                    let mut sn = g / t;
                    if j != k {
                        e[j - 1] = t;
                    }
                    f = cs * s[j] + sn * e[j];
                    e[j] = cs * e[j] - sn * s[j];
                    g = sn * s[j + 1];
                    s[j + 1] = cs * s[j + 1];
                    rotate_cols(&mut v, n, j, j + 1, cs, sn);
                    t = hypot(f, g);
                    cs = f / t;
                    sn = g / t;
                    s[j] = t;
                    f = cs * e[j] + sn * s[j + 1];
                    s[j + 1] = -sn * e[j] + cs * s[j + 1];
                    g = sn * e[j + 1];
                    e[j + 1] = cs * e[j + 1];
                    if j < m - 1 {
                        rotate_cols(&mut u, m, j, j + 1, cs, sn);
                    }
                }
                e[p - 2] = f;
                iter += 1;
            }
            // Convergence of s[k].
            _ => {
                if s[k] <= zero {
                    s[k] = if s[k] < zero { -s[k] } else { zero };
                    for i in 0..=pp {
                        v[i + k * n] = -v[i + k * n];
                    }
                }
                let mut k = k;
                while k < pp {
                    if s[k] >= s[k + 1] {
                        break;
                    }
                    s.swap(k, k + 1);
                    if k < n - 1 {
                        for i in 0..n {
                            v.swap(i + k * n, i + (k + 1) * n);
                        }
                    }
                    if k < m - 1 {
                        for i in 0..m {
                            u.swap(i + k * m, i + (k + 1) * m);
                        }
                    }
                    k += 1;
                }
                iter = 0;
                p -= 1;
            }
        }
    }
    s.truncate(n);
    Ok((u, s, v))
}

impl<T: Scalar> SvdFactors<T> {
    /// Number of terms `p = min(m, n)`.
    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    pub fn nrows(&self) -> usize {
        self.u.rows()
    }

    pub fn ncols(&self) -> usize {
        self.v.rows()
    }

    /// Eckart–Young truncation `Σ_{i<k} σᵢ uᵢ vᵢᵀ`; `k = 0` gives the zero matrix.
    pub fn truncate(&self, k: usize) -> Result<Matrix<T>> {
        if k > self.len() {
            return Err(Error::InvalidRank {
                rank: k,
                reason: format!("exceeds min(m, n) = {}", self.len()),
            });
        }
        let (m, n) = (self.nrows(), self.ncols());
        let mut out = Matrix::zeros(m, n);
        for t in 0..k {
            let sig = self.sigma[t];
            if sig == T::zero() {
                continue;
            }
            for i in 0..m {
                let a = sig * self.u.get(i, t);
                if a == T::zero() {
                    continue;
                }
                let row = out.row_mut(i);
                for (j, o) in row.iter_mut().enumerate() {
                    *o += a * self.v.get(j, t);
                }
            }
        }
        Ok(out)
    }

    /// Rebuilds the full product `U diag(σ) Vᵀ`.
    pub fn reconstruct(&self) -> Matrix<T> {
        self.truncate(self.len()).expect("p terms always valid")
    }

    /// Number of singular values strictly above `tol * σ₁`.
    pub fn numerical_rank(&self, tol: T) -> usize {
        let s1 = self.sigma.first().copied().unwrap_or(T::zero());
        self.sigma.iter().filter(|&&s| s > tol * s1 && s > T::zero()).count()
    }

    /// Pseudoinverse of the rank-`k` truncation, `V_k diag(σᵢ⁺) U_kᵀ`,
    /// with σᵢ at or below `tol * σ₁` inverted to zero.
    pub fn truncated_pinv(&self, k: usize, tol: T) -> Result<Matrix<T>> {
        if k > self.len() {
            return Err(Error::InvalidRank {
                rank: k,
                reason: format!("exceeds min(m, n) = {}", self.len()),
            });
        }
        let inv = self.inverted_sigma(tol);
        let (m, n) = (self.nrows(), self.ncols());
        let mut out = Matrix::zeros(n, m);
        for t in 0..k {
            if inv[t] == T::zero() {
                continue;
            }
            for i in 0..n {
                let a = inv[t] * self.v.get(i, t);
                if a == T::zero() {
                    continue;
                }
                let row = out.row_mut(i);
                for (j, o) in row.iter_mut().enumerate() {
                    *o += a * self.u.get(j, t);
                }
            }
        }
        Ok(out)
    }

    /// `σᵢ⁺` for each term: `1/σᵢ` above `tol * σ₁`, else zero.
    pub fn inverted_sigma(&self, tol: T) -> Vec<T> {
        let s1 = self.sigma.first().copied().unwrap_or(T::zero());
        self.sigma
            .iter()
            .map(|&s| if s > T::zero() && s > tol * s1 { T::one() / s } else { T::zero() })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_factors(x: &Matrix<f64>, f: &SvdFactors<f64>) {
        let p = x.rows().min(x.cols());
        assert_eq!(f.sigma.len(), p);
        for w in f.sigma.windows(2) {
            assert!(w[0] >= w[1]);
        }
        assert!(f.sigma.iter().all(|&s| s >= 0.0));
        let utu = f.u.t_matmul(&f.u).unwrap();
        let vtv = f.v.t_matmul(&f.v).unwrap();
        let id = Matrix::identity(p);
        assert!(utu.sub(&id).unwrap().frob_norm() <= 1e-10 * p as f64);
        assert!(vtv.sub(&id).unwrap().frob_norm() <= 1e-10 * p as f64);
        let rec = f.reconstruct();
        assert!(rec.sub(x).unwrap().frob_norm() <= 1e-8 * (1.0 + x.frob_norm()));
    }

    #[test]
    fn identity_and_diagonal() {
        let f = svd(&Matrix::<f64>::identity(2)).unwrap();
        assert_eq!(f.sigma, vec![1.0, 1.0]);
        let d = Matrix::from_rows(&[[3.0, 0.0], [0.0, 0.0]]).unwrap();
        let f = svd(&d).unwrap();
        assert_eq!(f.sigma, vec![3.0, 0.0]);
        check_factors(&d, &f);
    }

    #[test]
    fn wide_tall_and_degenerate_shapes() {
        let mut seed = 17u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        for &(m, n) in &[(1, 1), (1, 5), (5, 1), (2, 2), (7, 3), (3, 7), (12, 12), (30, 17), (17, 30)] {
            let x = Matrix::from_fn(m, n, |_, _| next());
            let f = svd(&x).unwrap();
            check_factors(&x, &f);
        }
        let z = Matrix::<f64>::zeros(3, 4);
        let f = svd(&z).unwrap();
        assert!(f.sigma.iter().all(|&s| s == 0.0));
        check_factors(&z, &f);
    }

    #[test]
    fn sign_convention_largest_entry_positive() {
        let x = Matrix::from_rows(&[[-5.0f64, 0.0], [0.0, -1.0], [0.0, 0.0]]).unwrap();
        let f = svd(&x).unwrap();
        for k in 0..2 {
            let col = f.u.column(k);
            let best = col.iter().copied().fold(0.0f64, |b, c| if c.abs() > b.abs() { c } else { b });
            assert!(best > 0.0);
        }
        check_factors(&x, &f);
    }

    #[test]
    fn truncation_basics() {
        let d = Matrix::from_rows(&[[2.0, 0.0], [0.0, 1.0]]).unwrap();
        let f = svd(&d).unwrap();
        assert_eq!(f.truncate(0).unwrap(), Matrix::zeros(2, 2));
        let t1 = f.truncate(1).unwrap();
        assert!(t1.sub(&Matrix::from_rows(&[[2.0, 0.0], [0.0, 0.0]]).unwrap()).unwrap().max_abs() < 1e-15);
        assert!(matches!(f.truncate(3), Err(Error::InvalidRank { rank: 3, .. })));
    }

    #[test]
    fn f32_decomposition() {
        let x = Matrix::<f32>::from_rows(&[[4.0, 1.0, 0.5], [2.0, 3.0, 1.0]]).unwrap();
        let f = svd(&x).unwrap();
        assert!(f.reconstruct().sub(&x).unwrap().frob_norm() < 1e-5);
    }
}
