//! Bi-cross-validation of the truncated SVD.
//!
//! For a fold with blocks `A, B, C, D` the rank-`k` prediction of `A` is
//! `B (D̂ₖ)⁺ C` (type I) or `B̂ₖ (D̂ₖ)⁺ Ĉₖ` (type II), where hats denote
//! Eckart–Young truncations. One SVD of each block serves every `k`.

use crate::curve::{BcvCurve, CurveMetadata};
use crate::error::{Error, Result};
use crate::holdout::{split_blocks, Blocks, HoldoutPlan};
use crate::linalg::{default_pinv_tol, svd, SvdFactors};
use crate::matrix::Matrix;
use crate::random::{random_rotation_pair, rotate};
use crate::rng::Rng;
use crate::scalar::Scalar;
use rayon::prelude::*;
use std::fmt;
use std::str::FromStr;

/// Which blocks are truncated before predicting `A`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ResidualMode {
    /// `A - B (D̂ₖ)⁺ C`
    TypeI,
    /// `A - B̂ₖ (D̂ₖ)⁺ Ĉₖ`
    TypeII,
}

impl ResidualMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ResidualMode::TypeI => "I",
            ResidualMode::TypeII => "II",
        }
    }
}

impl fmt::Display for ResidualMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ResidualMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "I" | "i" | "1" | "type1" | "typeI" => Ok(ResidualMode::TypeI),
            "II" | "ii" | "2" | "type2" | "typeII" => Ok(ResidualMode::TypeII),
            other => Err(Error::InvalidArgument(format!("unknown SVD residual mode '{}'", other))),
        }
    }
}

struct TypeTwoParts<T> {
    b: SvdFactors<T>,
    c: SvdFactors<T>,
    /// `diag(σ_B) V_Bᵀ V_D`
    gb: Matrix<T>,
    /// `U_Dᵀ U_C diag(σ_C)`
    hc: Matrix<T>,
}

/// Precomputed factorizations for one fold, shared across ranks.
pub struct SvdFoldPredictor<'a, T> {
    blocks: &'a Blocks<T>,
    inv_sigma: Vec<T>,
    /// `B V_D` (type I).
    bv: Matrix<T>,
    /// `U_Dᵀ C` (type I).
    uc: Matrix<T>,
    d: SvdFactors<T>,
    two: Option<TypeTwoParts<T>>,
}

impl<'a, T: Scalar> SvdFoldPredictor<'a, T> {
    pub fn new(blocks: &'a Blocks<T>, mode: ResidualMode) -> Result<Self> {
        let d = svd(&blocks.d)?;
        let tol = default_pinv_tol::<T>(blocks.d.rows(), blocks.d.cols());
        let inv_sigma = d.inverted_sigma(tol);
        let (bv, uc, two) = match mode {
            ResidualMode::TypeI => (blocks.b.matmul(&d.v)?, d.u.t_matmul(&blocks.c)?, None),
            ResidualMode::TypeII => {
                let b = svd(&blocks.b)?;
                let c = svd(&blocks.c)?;
                let gb = scale_rows(&b.v.t_matmul(&d.v)?, &b.sigma);
                let hc = scale_cols(&d.u.t_matmul(&c.u)?, &c.sigma);
                (Matrix::zeros(0, 0), Matrix::zeros(0, 0), Some(TypeTwoParts { b, c, gb, hc }))
            }
        };
        Ok(SvdFoldPredictor { blocks, inv_sigma, bv, uc, d, two })
    }

    pub fn max_rank(&self) -> usize {
        self.d.len()
    }

    fn check_rank(&self, k: usize) -> Result<()> {
        if k > self.max_rank() {
            return Err(Error::InvalidRank {
                rank: k,
                reason: format!(
                    "exceeds min(m - r, n - s) = {} for this fold",
                    self.max_rank()
                ),
            });
        }
        Ok(())
    }

    /// Rank-`k` prediction of the held-out block.
    pub fn prediction(&self, k: usize) -> Result<Matrix<T>> {
        self.check_rank(k)?;
        let (r, s) = self.blocks.a.shape();
        let mut pred = Matrix::zeros(r, s);
        match &self.two {
            None => {
                for t in 0..k {
                    add_outer(&mut pred, &self.bv, t, &self.uc, t, self.inv_sigma[t]);
                }
            }
            Some(parts) => {
                let kb = k.min(parts.b.len());
                let kc = k.min(parts.c.len());
                // (B̂ₖ V_D)[:, :k] and (U_Dᵀ Ĉₖ)[:k, :].
                let left = parts.b.u.leading_columns(kb).matmul(&leading_block(&parts.gb, kb, k))?;
                let right =
                    leading_block(&parts.hc, k, kc).matmul(&parts.c.v.leading_columns(kc).transpose())?;
                for t in 0..k {
                    add_outer(&mut pred, &left, t, &right, t, self.inv_sigma[t]);
                }
            }
        }
        Ok(pred)
    }

    pub fn residual(&self, k: usize) -> Result<Matrix<T>> {
        self.blocks.a.sub(&self.prediction(k)?)
    }

    /// Squared residual norms for each requested rank.
    pub fn residual_norms(&self, ranks: &[usize]) -> Result<Vec<f64>> {
        for &k in ranks {
            self.check_rank(k)?;
        }
        if self.two.is_some() {
            return ranks
                .iter()
                .map(|&k| Ok(self.residual(k)?.frob_norm_sq().to_f64_lossy()))
                .collect();
        }
        // Type I predictions are prefix sums over terms.
        let max_k = ranks.iter().copied().max().unwrap_or(0);
        let (r, s) = self.blocks.a.shape();
        let mut pred = Matrix::zeros(r, s);
        let mut by_rank = Vec::with_capacity(max_k + 1);
        by_rank.push(self.blocks.a.dist_sq(&pred)?);
        for t in 0..max_k {
            add_outer(&mut pred, &self.bv, t, &self.uc, t, self.inv_sigma[t]);
            by_rank.push(self.blocks.a.dist_sq(&pred)?);
        }
        Ok(ranks.iter().map(|&k| by_rank[k]).collect())
    }
}

fn scale_rows<T: Scalar>(m: &Matrix<T>, d: &[T]) -> Matrix<T> {
    Matrix::from_fn(m.rows(), m.cols(), |i, j| m.get(i, j) * d[i])
}

fn scale_cols<T: Scalar>(m: &Matrix<T>, d: &[T]) -> Matrix<T> {
    Matrix::from_fn(m.rows(), m.cols(), |i, j| m.get(i, j) * d[j])
}

fn leading_block<T: Scalar>(m: &Matrix<T>, rows: usize, cols: usize) -> Matrix<T> {
    Matrix::from_fn(rows, cols, |i, j| m.get(i, j))
}

/// `pred += w * left[:, lc] * right[rr, :]`.
fn add_outer<T: Scalar>(pred: &mut Matrix<T>, left: &Matrix<T>, lc: usize, right: &Matrix<T>, rr: usize, w: T) {
    if w == T::zero() {
        return;
    }
    let rrow = right.row(rr);
    for i in 0..pred.rows() {
        let a = w * left.get(i, lc);
        if a == T::zero() {
            continue;
        }
        for (p, &b) in pred.row_mut(i).iter_mut().zip(rrow) {
            *p += a * b;
        }
    }
}

/// Held-out residual for one fold at rank `k`; `k = 0` returns `A`.
pub fn svd_holdout_residual<T: Scalar>(blocks: &Blocks<T>, k: usize, mode: ResidualMode) -> Result<Matrix<T>> {
    if k > blocks.max_rank() {
        return Err(Error::InvalidRank {
            rank: k,
            reason: format!("exceeds min(m - r, n - s) = {}", blocks.max_rank()),
        });
    }
    if k == 0 {
        return Ok(blocks.a.clone());
    }
    SvdFoldPredictor::new(blocks, mode)?.residual(k)
}

pub(crate) fn validate_ranks(ranks: &[usize], max_rank: usize) -> Result<()> {
    if ranks.is_empty() {
        return Err(Error::InvalidArgument("empty rank list".into()));
    }
    if let Some(&k) = ranks.iter().find(|&&k| k > max_rank) {
        return Err(Error::InvalidRank {
            rank: k,
            reason: format!("largest rank every fold can fit is min(m - r, n - s) = {}", max_rank),
        });
    }
    Ok(())
}

/// `BCV(k)`: squared held-out residual summed over every fold of `plan`.
///
/// Folds may be processed in parallel; totals are accumulated in fold
/// order so the result does not depend on the thread count.
pub fn bcv_svd_curve<T: Scalar>(
    x: &Matrix<T>,
    plan: &HoldoutPlan,
    ranks: &[usize],
    mode: ResidualMode,
) -> Result<BcvCurve> {
    plan.check_dims(x.rows(), x.cols())?;
    validate_ranks(ranks, plan.max_fit_rank())?;
    let per_fold: Vec<Vec<f64>> = plan
        .folds()
        .par_iter()
        .map(|fold| {
            let blocks = split_blocks(x, fold)?;
            SvdFoldPredictor::new(&blocks, mode)?.residual_norms(ranks)
        })
        .collect::<Result<_>>()?;
    let mut scores = vec![0.0; ranks.len()];
    for fold_scores in &per_fold {
        for (acc, s) in scores.iter_mut().zip(fold_scores) {
            *acc += s;
        }
    }
    let mut md = CurveMetadata::new("bcv-svd");
    md.mode = Some(mode.as_str().into());
    md.seed = Some(plan.seed());
    md.plan = Some(plan.clone());
    let mut curve = BcvCurve::new(ranks.to_vec(), scores, md)?;
    curve.per_fold = Some(per_fold);
    Ok(curve)
}

/// BCV of `O_L X O_Rᵀ` for Haar-random rotations drawn from `rng`, which
/// makes sparse outer-product structure visible to the holdout.
pub fn bcv_svd_curve_rotated<T: Scalar>(
    x: &Matrix<T>,
    plan: &HoldoutPlan,
    ranks: &[usize],
    mode: ResidualMode,
    rng: &mut Rng,
) -> Result<BcvCurve> {
    let (ol, or) = random_rotation_pair::<T>(x.rows(), x.cols(), rng);
    let rotated = rotate(x, &ol, &or)?;
    let mut curve = bcv_svd_curve(&rotated, plan, ranks, mode)?;
    curve.metadata.params.insert("rotation_seed".into(), rng.seed().into());
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::holdout::Fold;
    use crate::linalg::{pinv_default, truncate_svd};
    use crate::random::{sample_gaussian, sample_uniform};

    fn spike() -> Matrix<f64> {
        let mut x = Matrix::zeros(4, 4);
        x[(0, 0)] = 1.0;
        x
    }

    /// Direct transcription: truncate, pseudoinvert, multiply.
    fn oracle_residual(b: &Blocks<f64>, k: usize, mode: ResidualMode) -> Matrix<f64> {
        let dk = truncate_svd(&svd(&b.d).unwrap(), k).unwrap();
        let (bb, cc) = match mode {
            ResidualMode::TypeI => (b.b.clone(), b.c.clone()),
            ResidualMode::TypeII => {
                let fb = svd(&b.b).unwrap();
                let fc = svd(&b.c).unwrap();
                (truncate_svd(&fb, k.min(fb.len())).unwrap(), truncate_svd(&fc, k.min(fc.len())).unwrap())
            }
        };
        let pred = bb.matmul(&pinv_default(&dk).unwrap()).unwrap().matmul(&cc).unwrap();
        b.a.sub(&pred).unwrap()
    }

    #[test]
    fn spike_prediction_is_zero() {
        let fold = Fold { held_rows: vec![0], held_cols: vec![0], fold_id: (0, 0) };
        let b = split_blocks(&spike(), &fold).unwrap();
        let res = svd_holdout_residual(&b, 1, ResidualMode::TypeI).unwrap();
        assert_eq!(res, Matrix::from_rows(&[[1.0]]).unwrap());
    }

    #[test]
    fn rank_zero_returns_a() {
        let x: Matrix<f64> = sample_gaussian(6, 5, &mut Rng::new(1));
        let fold = Fold { held_rows: vec![1, 4], held_cols: vec![0, 2], fold_id: (0, 0) };
        let b = split_blocks(&x, &fold).unwrap();
        for mode in [ResidualMode::TypeI, ResidualMode::TypeII] {
            assert_eq!(svd_holdout_residual(&b, 0, mode).unwrap(), b.a);
        }
        assert!(matches!(svd_holdout_residual(&b, 4, ResidualMode::TypeI), Err(Error::InvalidRank { .. })));
    }

    #[test]
    fn matches_direct_transcription() {
        let mut rng = Rng::new(8);
        let x: Matrix<f64> = sample_gaussian(9, 7, &mut rng);
        let fold = Fold { held_rows: vec![0, 3, 5], held_cols: vec![1, 6], fold_id: (0, 0) };
        let b = split_blocks(&x, &fold).unwrap();
        for mode in [ResidualMode::TypeI, ResidualMode::TypeII] {
            for k in 0..=5 {
                let got = svd_holdout_residual(&b, k, mode).unwrap();
                let want = oracle_residual(&b, k, mode);
                assert!(got.sub(&want).unwrap().max_abs() < 1e-9, "mode {} k {}", mode, k);
            }
        }
    }

    #[test]
    fn exact_rank_two_is_self_consistent() {
        let mut rng = Rng::new(21);
        let l: Matrix<f64> = sample_uniform(8, 2, &mut rng);
        let r: Matrix<f64> = sample_uniform(2, 8, &mut rng);
        let x = l.matmul(&r).unwrap();
        let fold = Fold { held_rows: vec![2, 5], held_cols: vec![0, 7], fold_id: (0, 0) };
        let b = split_blocks(&x, &fold).unwrap();
        let res = svd_holdout_residual(&b, 2, ResidualMode::TypeI).unwrap();
        assert!(res.frob_norm() <= 1e-8 * b.a.frob_norm());
    }

    #[test]
    fn rank_zero_score_is_total_energy() {
        let x: Matrix<f64> = sample_gaussian(10, 9, &mut Rng::new(2));
        let plan = HoldoutPlan::new(10, 9, 3, 2, 4).unwrap();
        let c = bcv_svd_curve(&x, &plan, &[0, 1, 2], ResidualMode::TypeI).unwrap();
        assert!((c.scores[0] - x.frob_norm_sq()).abs() <= 1e-12 * x.frob_norm_sq());
    }

    #[test]
    fn curve_errors() {
        let x: Matrix<f64> = sample_gaussian(6, 6, &mut Rng::new(2));
        let plan = HoldoutPlan::new(6, 6, 2, 2, 0).unwrap();
        assert!(matches!(bcv_svd_curve(&x, &plan, &[], ResidualMode::TypeI), Err(Error::InvalidArgument(_))));
        assert!(matches!(bcv_svd_curve(&x, &plan, &[0, 4], ResidualMode::TypeI), Err(Error::InvalidRank { .. })));
        let other = HoldoutPlan::new(5, 6, 2, 2, 0).unwrap();
        assert!(matches!(bcv_svd_curve(&x, &other, &[0], ResidualMode::TypeI), Err(Error::Dimension(_))));
    }

    #[test]
    fn modes_parse() {
        assert_eq!("I".parse::<ResidualMode>().unwrap(), ResidualMode::TypeI);
        assert_eq!("II".parse::<ResidualMode>().unwrap(), ResidualMode::TypeII);
        assert!("III".parse::<ResidualMode>().is_err());
    }
}
