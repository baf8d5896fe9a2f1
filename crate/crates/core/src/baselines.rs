//! Comparator rank selectors: the Bai–Ng BIC criteria and a generalized
//! Eastment–Krzanowski cross-validator.

use crate::bcv_svd::validate_ranks;
use crate::curve::{BcvCurve, CurveMetadata};
use crate::error::{Error, Result};
use crate::holdout::HoldoutPlan;
use crate::linalg::{default_pinv_tol, svd, SvdFactors};
use crate::matrix::Matrix;
use crate::scalar::Scalar;
use rayon::prelude::*;
use std::fmt;
use std::str::FromStr;

/// The three Bai–Ng information criteria. All use `C² = min(m, n)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BicVariant {
    /// Penalty `k (m+n)/(mn) log(mn/(m+n))`.
    Bic1,
    /// Penalty `k (m+n)/(mn) log C²`.
    Bic2,
    /// Penalty `k log(C²)/C²`.
    Bic3,
}

impl BicVariant {
    pub const ALL: [BicVariant; 3] = [BicVariant::Bic1, BicVariant::Bic2, BicVariant::Bic3];

    pub fn as_str(&self) -> &'static str {
        match self {
            BicVariant::Bic1 => "bic1",
            BicVariant::Bic2 => "bic2",
            BicVariant::Bic3 => "bic3",
        }
    }

    /// Penalty added per unit of rank for an `m x n` matrix.
    pub fn penalty_per_rank(&self, m: usize, n: usize) -> f64 {
        let (mf, nf) = (m as f64, n as f64);
        let c2 = mf.min(nf);
        let ratio = (mf + nf) / (mf * nf);
        match self {
            BicVariant::Bic1 => ratio * (mf * nf / (mf + nf)).ln(),
            BicVariant::Bic2 => ratio * c2.ln(),
            BicVariant::Bic3 => c2.ln() / c2,
        }
    }
}

impl fmt::Display for BicVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BicVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bic1" | "1" => Ok(BicVariant::Bic1),
            "bic2" | "2" => Ok(BicVariant::Bic2),
            "bic3" | "3" => Ok(BicVariant::Bic3),
            other => Err(Error::InvalidArgument(format!("unknown BIC variant '{}'", other))),
        }
    }
}

/// `‖X - X̂⁽ᵏ⁾‖²` for each rank, from the singular values by tail sums.
fn truncation_residuals<T: Scalar>(sigma: &[T], ranks: &[usize]) -> Vec<f64> {
    let sq: Vec<f64> = sigma.iter().map(|s| s.to_f64_lossy().powi(2)).collect();
    let mut tail = vec![0.0; sq.len() + 1];
    for i in (0..sq.len()).rev() {
        tail[i] = tail[i + 1] + sq[i];
    }
    ranks.iter().map(|&k| tail[k.min(sq.len())]).collect()
}

fn bic_from_svd(f: &SvdFactors<f64>, m: usize, n: usize, ranks: &[usize], variant: BicVariant) -> Result<BcvCurve> {
    let residuals = truncation_residuals(&f.sigma, ranks);
    let total: f64 = f.sigma.iter().map(|s| s * s).sum();
    // Tail mass at roundoff level counts as an exact fit.
    let floor = (m.max(n) as f64 * f64::EPSILON).powi(2) * total;
    let pen = variant.penalty_per_rank(m, n);
    let scores: Vec<f64> = residuals
        .iter()
        .zip(ranks)
        .map(|(&rss, &k)| if rss <= floor { f64::NEG_INFINITY } else { rss.ln() + k as f64 * pen })
        .collect();
    let mut md = CurveMetadata::new(variant.as_str());
    md.params.insert("penalty_per_rank".into(), pen.into());
    let mut curve = BcvCurve::new(ranks.to_vec(), scores, md)?;
    if curve.exact_fit {
        curve.warnings.push(format!("rank {} fits the data exactly", curve.selected_rank));
    }
    Ok(curve)
}

/// BIC curve for one variant. All residual norms come from a single SVD.
pub fn bic_curve<T: Scalar>(x: &Matrix<T>, ranks: &[usize], variant: BicVariant) -> Result<BcvCurve> {
    Ok(bic_curves(x, ranks, &[variant])?.remove(0))
}

/// BIC curves for several variants sharing one SVD of `x`.
pub fn bic_curves<T: Scalar>(x: &Matrix<T>, ranks: &[usize], variants: &[BicVariant]) -> Result<Vec<BcvCurve>> {
    let (m, n) = x.shape();
    validate_ranks(ranks, m.min(n))?;
    let f = svd(&x.cast::<f64>())?;
    variants.iter().map(|&v| bic_from_svd(&f, m, n, ranks, v)).collect()
}

/// Leading singular triplets of a partial SVD.
struct PartialSvd {
    sigma: Vec<f64>,
    /// Columns are singular vectors (left or right, depending on the side).
    vectors: Matrix<f64>,
    /// Number of terms above the pseudoinverse tolerance.
    usable: usize,
}

fn partial(x: &Matrix<f64>, rows: &[usize], cols: &[usize], kmax: usize, left: bool) -> Result<PartialSvd> {
    let sub = x.select(rows, cols)?;
    let f = svd(&sub)?;
    let tol: f64 = default_pinv_tol::<f64>(sub.rows(), sub.cols()) * f.sigma.first().copied().unwrap_or(0.0);
    let keep = kmax.min(f.len());
    let usable = f.sigma.iter().take(keep).take_while(|&&s| s > tol).count();
    let src = if left { &f.u } else { &f.v };
    Ok(PartialSvd { sigma: f.sigma[..keep].to_vec(), vectors: src.leading_columns(keep), usable })
}

fn complement(n: usize, held: &[usize]) -> Vec<usize> {
    let mut mask = vec![true; n];
    for &i in held {
        mask[i] = false;
    }
    (0..n).filter(|&i| mask[i]).collect()
}

/// Generalized Eastment–Krzanowski cross-validation on the folds of `plan`.
///
/// For a fold holding out rows `I` and columns `J`, term `t` of the
/// prediction pairs left vector `t` of `X` without columns `J` with right
/// vector `t` of `X` without rows `I`, weighted by the geometric mean of the
/// two `t`-th singular values. A term is negated when its mean elementwise
/// product with the matching full-data term `u_t v_tᵀ` over the held block
/// is negative. Terms past the numerical rank of either partial SVD are
/// skipped with a warning.
pub fn ek_curve<T: Scalar>(x: &Matrix<T>, plan: &HoldoutPlan, ranks: &[usize]) -> Result<BcvCurve> {
    let (m, n) = x.shape();
    plan.check_dims(m, n)?;
    validate_ranks(ranks, plan.max_fit_rank())?;
    let xf = x.cast::<f64>();
    let kmax = *ranks.iter().max().expect("validated nonempty");
    let full = svd(&xf)?;
    let all_rows: Vec<usize> = (0..m).collect();
    let all_cols: Vec<usize> = (0..n).collect();
    // Each partial SVD depends on one group only, so h + l of them serve every fold.
    let right: Vec<PartialSvd> = plan
        .row_groups()
        .par_iter()
        .map(|g| partial(&xf, &complement(m, g), &all_cols, kmax, false))
        .collect::<Result<_>>()?;
    let left: Vec<PartialSvd> = plan
        .col_groups()
        .par_iter()
        .map(|g| partial(&xf, &all_rows, &complement(n, g), kmax, true))
        .collect::<Result<_>>()?;

    let folds = plan.folds();
    let fold_results: Vec<(Vec<f64>, Vec<String>)> = folds
        .par_iter()
        .map(|fold| {
            let (gi, gj) = fold.fold_id;
            let (rs, cs) = (&right[gi], &left[gj]);
            let rows = &fold.held_rows;
            let cols = &fold.held_cols;
            let a = xf.select(rows, cols)?;
            let mut pred = Matrix::<f64>::zeros(rows.len(), cols.len());
            let mut norms = Vec::with_capacity(ranks.len());
            let mut warnings = Vec::new();
            let mut norm_at = vec![0.0; kmax + 1];
            norm_at[0] = a.frob_norm_sq();
            for t in 0..kmax {
                if t >= rs.usable || t >= cs.usable {
                    warnings.push(format!(
                        "fold ({}, {}): term {} skipped, partial SVD is rank deficient",
                        gi,
                        gj,
                        t + 1
                    ));
                } else {
                    let u_hat: Vec<f64> = rows.iter().map(|&i| cs.vectors.get(i, t)).collect();
                    let v_hat: Vec<f64> = cols.iter().map(|&j| rs.vectors.get(j, t)).collect();
                    let u_full: Vec<f64> = rows.iter().map(|&i| full.u.get(i, t)).collect();
                    let v_full: Vec<f64> = cols.iter().map(|&j| full.v.get(j, t)).collect();
                    let du: f64 = u_hat.iter().zip(&u_full).map(|(a, b)| a * b).sum();
                    let dv: f64 = v_hat.iter().zip(&v_full).map(|(a, b)| a * b).sum();
                    let mut weight = (rs.sigma[t] * cs.sigma[t]).sqrt();
                    // The mean of M_t ⊙ M̂_t factors as (u·û)(v·v̂)/(rs).
                    if du * dv < 0.0 {
                        weight = -weight;
                    }
                    for (p, &ui) in u_hat.iter().enumerate() {
                        let w = weight * ui;
                        for (q, &vj) in v_hat.iter().enumerate() {
                            pred[(p, q)] += w * vj;
                        }
                    }
                }
                norm_at[t + 1] = a.dist_sq(&pred)?;
            }
            for &k in ranks {
                norms.push(norm_at[k]);
            }
            Ok((norms, warnings))
        })
        .collect::<Result<_>>()?;

    let mut scores = vec![0.0; ranks.len()];
    let mut per_fold = Vec::with_capacity(folds.len());
    let mut warnings = Vec::new();
    for (norms, w) in fold_results {
        for (acc, s) in scores.iter_mut().zip(&norms) {
            *acc += s;
        }
        per_fold.push(norms);
        warnings.extend(w);
    }
    if !warnings.is_empty() {
        log::warn!("ek: {} rank-deficient terms skipped", warnings.len());
    }
    let mut md = CurveMetadata::new("ek");
    md.seed = Some(plan.seed());
    md.plan = Some(plan.clone());
    let mut curve = BcvCurve::new(ranks.to_vec(), scores, md)?;
    curve.per_fold = Some(per_fold);
    curve.warnings = warnings;
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::holdout::split_blocks;
    use crate::random::sample_gaussian;
    use crate::rng::Rng;

    #[test]
    fn rank_zero_is_log_total() {
        let x: Matrix<f64> = sample_gaussian(8, 6, &mut Rng::new(1));
        let ranks: Vec<usize> = (0..=6).collect();
        for c in bic_curves(&x, &ranks, &BicVariant::ALL).unwrap() {
            assert!((c.scores[0] - x.frob_norm_sq().ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn penalties_at_50_by_40() {
        assert!((BicVariant::Bic1.penalty_per_rank(50, 40) - 0.045 * (2000.0f64 / 90.0).ln()).abs() < 1e-15);
        assert!((BicVariant::Bic2.penalty_per_rank(50, 40) - 0.045 * 40f64.ln()).abs() < 1e-15);
        assert!((BicVariant::Bic3.penalty_per_rank(50, 40) - 40f64.ln() / 40.0).abs() < 1e-15);
    }

    #[test]
    fn exact_fit_scores_negative_infinity() {
        let mut rng = Rng::new(2);
        let l: Matrix<f64> = sample_gaussian(7, 2, &mut rng);
        let r: Matrix<f64> = sample_gaussian(2, 5, &mut rng);
        let x = l.matmul(&r).unwrap();
        let c = bic_curve(&x, &[0, 1, 2, 3], BicVariant::Bic2).unwrap();
        assert_eq!(c.scores[2], f64::NEG_INFINITY);
        assert_eq!(c.selected_rank, 2);
        assert!(c.exact_fit);
    }

    #[test]
    fn bic_selection_scale_invariant() {
        let x: Matrix<f64> = sample_gaussian(20, 15, &mut Rng::new(3));
        let ranks: Vec<usize> = (0..=10).collect();
        for v in BicVariant::ALL {
            let a = bic_curve(&x, &ranks, v).unwrap();
            let b = bic_curve(&x.scale(7.5), &ranks, v).unwrap();
            assert_eq!(a.selected_rank, b.selected_rank);
            let shift = 2.0 * 7.5f64.ln();
            for (sa, sb) in a.scores.iter().zip(&b.scores) {
                assert!((sb - sa - shift).abs() < 1e-10);
            }
        }
        assert!(bic_curve(&x, &[16], BicVariant::Bic1).is_err());
    }

    /// Direct two-SVD transcription for one fold.
    fn oracle_fold(x: &Matrix<f64>, rows: &[usize], cols: &[usize], k: usize) -> f64 {
        let (m, n) = x.shape();
        let full = svd(x).unwrap();
        let keep_r = complement(m, rows);
        let keep_c = complement(n, cols);
        let fr = svd(&x.select(&keep_r, &(0..n).collect::<Vec<_>>()).unwrap()).unwrap();
        let fc = svd(&x.select(&(0..m).collect::<Vec<_>>(), &keep_c).unwrap()).unwrap();
        let a = x.select(rows, cols).unwrap();
        let mut pred = Matrix::zeros(rows.len(), cols.len());
        for t in 0..k {
            let mut term = Matrix::from_fn(rows.len(), cols.len(), |p, q| {
                (fr.sigma[t] * fc.sigma[t]).sqrt() * fc.u.get(rows[p], t) * fr.v.get(cols[q], t)
            });
            let mt = Matrix::from_fn(rows.len(), cols.len(), |p, q| full.u.get(rows[p], t) * full.v.get(cols[q], t));
            let mean: f64 = term.as_slice().iter().zip(mt.as_slice()).map(|(a, b)| a * b).sum::<f64>();
            if mean < 0.0 {
                term = term.scale(-1.0);
            }
            pred = pred.add(&term).unwrap();
        }
        a.dist_sq(&pred).unwrap()
    }

    #[test]
    fn matches_direct_transcription() {
        let x: Matrix<f64> = sample_gaussian(12, 9, &mut Rng::new(4));
        let plan = HoldoutPlan::new(12, 9, 3, 3, 11).unwrap();
        let ranks = [0, 1, 2, 4];
        let c = ek_curve(&x, &plan, &ranks).unwrap();
        let per_fold = c.per_fold.as_ref().unwrap();
        for (fi, fold) in plan.folds().iter().enumerate() {
            for (ri, &k) in ranks.iter().enumerate() {
                let want = oracle_fold(&x, &fold.held_rows, &fold.held_cols, k);
                assert!((per_fold[fi][ri] - want).abs() <= 1e-9 * want.max(1.0), "fold {} k {}", fi, k);
            }
        }
        let b0 = split_blocks(&x, &plan.fold(0, 0)).unwrap();
        assert!((per_fold[0][0] - b0.a.frob_norm_sq()).abs() < 1e-12);
    }

    #[test]
    fn noiseless_rank_one_not_self_consistent() {
        let u = [0.6, 0.8, 0.0, 0.0];
        let v = [0.5, 0.5, 0.5, 0.5, 0.0];
        let x = Matrix::from_fn(4, 5, |i, j| 3.0 * u[i] * v[j]);
        let plan = HoldoutPlan::leave_one_out(4, 5).unwrap();
        let c = ek_curve(&x, &plan, &[0, 1]).unwrap();
        assert!(c.scores[1] > 1e-6);
    }

    #[test]
    fn positive_scaling_scales_scores() {
        let x: Matrix<f64> = sample_gaussian(10, 8, &mut Rng::new(6));
        let plan = HoldoutPlan::new(10, 8, 2, 2, 3).unwrap();
        let a = ek_curve(&x, &plan, &[0, 1, 2, 3]).unwrap();
        let b = ek_curve(&x.scale(3.0), &plan, &[0, 1, 2, 3]).unwrap();
        for (sa, sb) in a.scores.iter().zip(&b.scores) {
            assert!((sb - 9.0 * sa).abs() <= 1e-9 * sb);
        }
    }

    #[test]
    fn deficient_terms_warn() {
        let mut x = Matrix::<f64>::zeros(6, 6);
        x[(0, 0)] = 1.0;
        x[(3, 3)] = 2.0;
        let plan = HoldoutPlan::new(6, 6, 2, 2, 0).unwrap();
        let c = ek_curve(&x, &plan, &[0, 1, 2, 3]).unwrap();
        assert!(!c.warnings.is_empty());
        assert!(c.scores.iter().all(|s| s.is_finite()));
    }
}
