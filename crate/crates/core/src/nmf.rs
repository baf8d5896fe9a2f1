//! Nonnegative matrix factorization by alternating nonnegative least
//! squares, and bi-cross-validation of its rank.
//!
//! Every subproblem is a batch of independent NNLS problems sharing one
//! Gram matrix, solved column by column with a Lawson–Hanson active set
//! that works on the normal equations.

use crate::curve::{BcvCurve, CurveMetadata};
use crate::error::{Error, Result};
use crate::holdout::{split_blocks, Blocks, HoldoutPlan};
use crate::linalg::{cholesky, pinv_default};
use crate::matrix::Matrix;
use crate::rng::Rng;
use crate::scalar::Scalar;
use rayon::prelude::*;
use serde::Serialize;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

/// Relative KKT tolerance for [`nnls_solve`], measured against `‖WᵀM‖_∞`
/// (largest absolute entry).
pub const NNLS_KKT_TOLERANCE: f64 = 1e-10;

/// Result of a batch NNLS solve.
#[derive(Clone, Debug)]
pub struct NnlsSolution<T> {
    /// `k x q` nonnegative coefficients.
    pub x: Matrix<T>,
    /// Coefficient rows forced to zero because the matching column of `W`
    /// is identically zero.
    pub pinned_rows: Vec<usize>,
}

/// Solves `min_{H ≥ 0} ‖M - W H‖_F²` column by column. `M` is `p x q`,
/// `W` is `p x k`, the result `k x q`.
pub fn nnls_solve<T: Scalar>(m: &Matrix<T>, w: &Matrix<T>) -> Result<Matrix<T>> {
    Ok(nnls_solve_detailed(m, w)?.x)
}

/// [`nnls_solve`] that also reports pinned coefficient rows.
pub fn nnls_solve_detailed<T: Scalar>(m: &Matrix<T>, w: &Matrix<T>) -> Result<NnlsSolution<T>> {
    if m.rows() != w.rows() {
        return Err(Error::Dimension(format!(
            "nnls: M is {}x{} but W is {}x{}",
            m.rows(),
            m.cols(),
            w.rows(),
            w.cols()
        )));
    }
    let gram = w.t_matmul(w)?;
    // Row c of `rhs` is (Wᵀ M[:, c])ᵀ.
    let rhs = m.t_matmul(w)?;
    let (sol, pinned) = solve_gram_rows(&gram, &rhs);
    if !pinned.is_empty() {
        log::warn!("nnls: W has all-zero columns {:?}; coefficients pinned to 0", pinned);
    }
    Ok(NnlsSolution { x: sol.transpose(), pinned_rows: pinned })
}

/// Solves `min_{x ≥ 0} ½xᵀGx - fᵀx` for every row `f` of `rhs` (`q x k`),
/// returning the solutions as rows (`q x k`) and the indices pinned to zero
/// because `G` has a zero diagonal there.
pub(crate) fn solve_gram_rows<T: Scalar>(gram: &Matrix<T>, rhs: &Matrix<T>) -> (Matrix<T>, Vec<usize>) {
    let k = gram.rows();
    let q = rhs.rows();
    let pinned: Vec<usize> = (0..k).filter(|&j| gram.get(j, j) == T::zero()).collect();
    let mut sol = Matrix::zeros(q, k);
    if k == 0 {
        return (sol, pinned);
    }
    let scale = rhs.max_abs();
    if scale == T::zero() {
        return (sol, pinned);
    }
    let tol = T::of(NNLS_KKT_TOLERANCE) * scale;
    let mut ws = ActiveSetWorkspace::new(k);
    for c in 0..q {
        ws.solve(gram, rhs.row(c), &pinned, tol);
        sol.row_mut(c).copy_from_slice(&ws.x);
    }
    (sol, pinned)
}

struct ActiveSetWorkspace<T> {
    x: Vec<T>,
    z: Vec<T>,
    grad: Vec<T>,
    passive: Vec<bool>,
    blocked: Vec<bool>,
}

impl<T: Scalar> ActiveSetWorkspace<T> {
    fn new(k: usize) -> Self {
        ActiveSetWorkspace {
            x: vec![T::zero(); k],
            z: vec![T::zero(); k],
            grad: vec![T::zero(); k],
            passive: vec![false; k],
            blocked: vec![false; k],
        }
    }

    /// Negative gradient `f - G x`.
    fn update_dual(&mut self, g: &Matrix<T>, f: &[T]) {
        let k = f.len();
        for i in 0..k {
            let mut s = f[i];
            for j in 0..k {
                if self.x[j] != T::zero() {
                    s -= g.get(i, j) * self.x[j];
                }
            }
            self.grad[i] = s;
        }
    }

    /// Unconstrained solve on the passive set into `z`; `false` if the
    /// passive Gram block is numerically singular.
    fn solve_passive(&mut self, g: &Matrix<T>, f: &[T]) -> bool {
        let idx: Vec<usize> = (0..f.len()).filter(|&j| self.passive[j]).collect();
        let p = idx.len();
        let gp = Matrix::from_fn(p, p, |a, b| g.get(idx[a], idx[b]));
        let Ok(l) = cholesky(&gp) else { return false };
        // Reject near-singular blocks whose solve would be dominated by roundoff.
        let dmin = (0..p).map(|i| l.get(i, i)).fold(T::infinity(), T::min);
        let dmax = (0..p).map(|i| l.get(i, i)).fold(T::zero(), T::max);
        if dmin <= dmax * T::epsilon().sqrt() * T::of(1e-2) {
            return false;
        }
        let mut y: Vec<T> = idx.iter().map(|&j| f[j]).collect();
        for i in 0..p {
            let mut s = y[i];
            for t in 0..i {
                s -= l.get(i, t) * y[t];
            }
            y[i] = s / l.get(i, i);
        }
        for i in (0..p).rev() {
            let mut s = y[i];
            for t in (i + 1)..p {
                s -= l.get(t, i) * y[t];
            }
            y[i] = s / l.get(i, i);
        }
        for z in self.z.iter_mut() {
            *z = T::zero();
        }
        for (a, &j) in idx.iter().enumerate() {
            self.z[j] = y[a];
        }
        true
    }

    fn solve(&mut self, g: &Matrix<T>, f: &[T], pinned: &[usize], tol: T) {
        let k = f.len();
        for j in 0..k {
            self.x[j] = T::zero();
            self.passive[j] = false;
            self.blocked[j] = false;
        }
        for &j in pinned {
            self.blocked[j] = true;
        }
        self.update_dual(g, f);
        let max_outer = 3 * k + 10;
        for _ in 0..max_outer {
            // Entering variable: largest positive dual among the free set.
            let mut t = None;
            let mut best = tol;
            for j in 0..k {
                if !self.passive[j] && !self.blocked[j] && self.grad[j] > best {
                    best = self.grad[j];
                    t = Some(j);
                }
            }
            let Some(t) = t else { break };
            self.passive[t] = true;
            let mut inner = 0;
            loop {
                inner += 1;
                if !self.solve_passive(g, f) {
                    // Column t is collinear with the passive set; leave it out.
                    self.passive[t] = false;
                    self.blocked[t] = true;
                    break;
                }
                let feasible = (0..k).all(|j| !self.passive[j] || self.z[j] > T::zero());
                if feasible || inner > 3 * k + 10 {
                    for j in 0..k {
                        self.x[j] = if self.passive[j] { self.z[j].max(T::zero()) } else { T::zero() };
                    }
                    break;
                }
                // Step toward z until the first passive coordinate hits zero.
                let mut alpha = T::one();
                for j in 0..k {
                    if self.passive[j] && self.z[j] <= T::zero() {
                        let denom = self.x[j] - self.z[j];
                        if denom > T::zero() {
                            alpha = alpha.min(self.x[j] / denom);
                        }
                    }
                }
                for j in 0..k {
                    if self.passive[j] {
                        self.x[j] = self.x[j] + alpha * (self.z[j] - self.x[j]);
                        if self.x[j] <= T::zero() || (self.z[j] <= T::zero() && self.x[j] <= T::epsilon() * T::of(16.0)) {
                            self.x[j] = T::zero();
                            self.passive[j] = false;
                        }
                    }
                }
                if !(0..k).any(|j| self.passive[j]) {
                    break;
                }
            }
            self.update_dual(g, f);
        }
        self.refine(g, f);
    }

    /// One step of iterative refinement on the passive set, kept only if it
    /// preserves positivity.
    fn refine(&mut self, g: &Matrix<T>, f: &[T]) {
        if !(0..f.len()).any(|j| self.x[j] > T::zero()) {
            return;
        }
        for j in 0..f.len() {
            self.passive[j] = self.x[j] > T::zero();
        }
        self.update_dual(g, f);
        let saved = self.x.clone();
        // Solve G_PP δ = grad_P by reusing solve_passive on the residual.
        let residual = self.grad.clone();
        if self.solve_passive(g, &residual) {
            let mut ok = true;
            for j in 0..f.len() {
                if self.passive[j] {
                    let v = saved[j] + self.z[j];
                    if v <= T::zero() {
                        ok = false;
                    }
                }
            }
            if ok {
                for j in 0..f.len() {
                    if self.passive[j] {
                        self.x[j] = saved[j] + self.z[j];
                    }
                }
            }
        }
    }
}

/// Settings for [`fit_nmf`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NmfOptions {
    pub max_outer_iterations: usize,
    /// Stop once the relative objective decrease of one sweep falls below this.
    pub relative_tolerance: f64,
    /// Independent random starts; the lowest objective wins.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for NmfOptions {
    fn default() -> Self {
        Self::standalone()
    }
}

impl NmfOptions {
    /// Defaults for a single fit: 200 sweeps, tolerance 1e-4, 3 restarts.
    pub fn standalone() -> Self {
        NmfOptions { max_outer_iterations: 200, relative_tolerance: 1e-4, restarts: 3, seed: 0 }
    }

    /// Defaults for the many small fits inside BCV: one start each.
    pub fn for_bcv() -> Self {
        NmfOptions { restarts: 1, ..Self::standalone() }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_outer_iterations < 1 {
            return Err(Error::InvalidArgument("max_outer_iterations must be >= 1".into()));
        }
        if !(self.relative_tolerance > 0.0) {
            return Err(Error::InvalidArgument("relative_tolerance must be > 0".into()));
        }
        if self.restarts < 1 {
            return Err(Error::InvalidArgument("restarts must be >= 1".into()));
        }
        Ok(())
    }
}

/// Nonnegative factors `X ≈ W H` with fit diagnostics.
#[derive(Clone, Debug)]
pub struct NmfFactors<T> {
    /// `m x k`, entries `>= 0`.
    pub w: Matrix<T>,
    /// `k x n`, entries `>= 0`.
    pub h: Matrix<T>,
    /// `‖X - W H‖_F²`.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Whether the objective never rose between sweeps (slack `1e-10 ‖X‖²`).
    pub monotone: bool,
    pub seed: u64,
}

#[derive(Serialize)]
struct NmfSidecar {
    rank: usize,
    objective: f64,
    iterations: usize,
    converged: bool,
    seed: u64,
}

impl<T: Scalar> NmfFactors<T> {
    pub fn rank(&self) -> usize {
        self.w.cols()
    }

    pub fn product(&self) -> Matrix<T> {
        self.w.matmul_unchecked(&self.h)
    }

    /// Writes `<prefix>_W.csv`, `<prefix>_H.csv` and `<prefix>.json`.
    pub fn write_files(&self, dir: &Path, prefix: &str) -> Result<()> {
        crate::io::write_csv_file(&self.w, &dir.join(format!("{}_W.csv", prefix)))?;
        crate::io::write_csv_file(&self.h, &dir.join(format!("{}_H.csv", prefix)))?;
        let side = NmfSidecar {
            rank: self.rank(),
            objective: self.objective,
            iterations: self.iterations,
            converged: self.converged,
            seed: self.seed,
        };
        std::fs::write(dir.join(format!("{}.json", prefix)), serde_json::to_string_pretty(&side)?)?;
        Ok(())
    }
}

fn check_nonnegative<T: Scalar>(x: &Matrix<T>, what: &str) -> Result<()> {
    if let Some(pos) = x.as_slice().iter().position(|&v| v < T::zero()) {
        return Err(Error::Domain(format!(
            "{} has a negative entry at ({}, {})",
            what,
            pos / x.cols().max(1),
            pos % x.cols().max(1)
        )));
    }
    Ok(())
}

/// Fits a rank-`k` NMF by alternating exact nonnegative least-squares
/// updates of `H` and `W`, keeping the best of `opts.restarts` starts.
pub fn fit_nmf<T: Scalar>(x: &Matrix<T>, k: usize, opts: &NmfOptions) -> Result<NmfFactors<T>> {
    opts.validate()?;
    check_nonnegative(x, "NMF input")?;
    let (m, n) = x.shape();
    if k > m.min(n) {
        return Err(Error::InvalidRank { rank: k, reason: format!("exceeds min(m, n) = {}", m.min(n)) });
    }
    let total = x.frob_norm_sq().to_f64_lossy();
    if k == 0 {
        return Ok(NmfFactors {
            w: Matrix::zeros(m, 0),
            h: Matrix::zeros(0, n),
            objective: total,
            iterations: 0,
            converged: true,
            monotone: true,
            seed: opts.seed,
        });
    }
    let root = Rng::new(opts.seed);
    let mut best: Option<NmfFactors<T>> = None;
    for restart in 0..opts.restarts {
        let mut rng = root.child_indexed("nmf-restart", &[restart as u64]);
        let fit = fit_once(x, k, opts, &mut rng, total);
        if best.as_ref().is_none_or(|b| fit.objective < b.objective) {
            best = Some(fit);
        }
    }
    let mut best = best.expect("restarts >= 1");
    best.seed = opts.seed;
    Ok(best)
}

fn fit_once<T: Scalar>(x: &Matrix<T>, k: usize, opts: &NmfOptions, rng: &mut Rng, total: f64) -> NmfFactors<T> {
    let (m, n) = x.shape();
    let init_scale = (x.mean().to_f64_lossy() / k as f64).max(0.0).sqrt();
    let mut w = Matrix::from_fn(m, k, |_, _| T::of(rng.uniform() * init_scale));
    let mut h = Matrix::zeros(k, n);
    let mut prev = f64::INFINITY;
    let mut converged = false;
    let mut monotone = true;
    let mut iterations = 0;
    let slack = 1e-10 * total;
    for it in 0..opts.max_outer_iterations {
        iterations = it + 1;
        // H-step: rows of (Xᵀ W) are the right-hand sides for columns of H.
        let gram_w = w.t_matmul(&w).expect("conforming");
        let xt_w = x.t_matmul(&w).expect("conforming");
        h = solve_gram_rows(&gram_w, &xt_w).0.transpose();
        // W-step: rows of (X Hᵀ) are the right-hand sides for rows of W.
        let ht = h.transpose();
        let gram_h = h.matmul_unchecked(&ht);
        let x_ht = x.matmul_unchecked(&ht);
        w = solve_gram_rows(&gram_h, &x_ht).0;
        // ‖X‖² - 2⟨W, X Hᵀ⟩ + ⟨WᵀW, H Hᵀ⟩
        let cross: f64 = w.as_slice().iter().zip(x_ht.as_slice()).map(|(&a, &b)| (a * b).to_f64_lossy()).sum();
        let gram_w_new = w.t_matmul(&w).expect("conforming");
        let quad: f64 = gram_w_new
            .as_slice()
            .iter()
            .zip(gram_h.as_slice())
            .map(|(&a, &b)| (a * b).to_f64_lossy())
            .sum();
        let obj = (total - 2.0 * cross + quad).max(0.0);
        if obj > prev + slack {
            monotone = false;
        }
        if prev.is_finite() && (prev - obj) <= opts.relative_tolerance * prev.max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
        if obj == 0.0 {
            converged = true;
            break;
        }
        prev = obj;
    }
    let objective = x.dist_sq(&w.matmul_unchecked(&h)).expect("conforming");
    NmfFactors { w, h, objective, iterations, converged, monotone, seed: rng.seed() }
}

/// How the held-out block is predicted from an NMF of `D = W_D H_D`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NmfResidualMode {
    /// `A - (B H_D⁺)(W_D⁺ C)`; factors may go negative.
    Simple,
    /// `A - W_A H_A` with `W_A`, `H_A` nonnegative least-squares refits.
    Conforming,
}

impl NmfResidualMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            NmfResidualMode::Simple => "simple",
            NmfResidualMode::Conforming => "conforming",
        }
    }
}

impl fmt::Display for NmfResidualMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NmfResidualMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "simple" | "plain" => Ok(NmfResidualMode::Simple),
            "conforming" => Ok(NmfResidualMode::Conforming),
            other => Err(Error::InvalidArgument(format!("unknown NMF residual mode '{}'", other))),
        }
    }
}

/// Rank-`k` NMF prediction of `A` from the other three blocks.
pub fn nmf_holdout_prediction<T: Scalar>(
    blocks: &Blocks<T>,
    k: usize,
    mode: NmfResidualMode,
    opts: &NmfOptions,
) -> Result<Matrix<T>> {
    if !blocks.is_nonnegative() {
        return Err(Error::Domain("NMF holdout blocks must be nonnegative".into()));
    }
    if k > blocks.max_rank() {
        return Err(Error::InvalidRank {
            rank: k,
            reason: format!("exceeds min(m - r, n - s) = {}", blocks.max_rank()),
        });
    }
    let (r, s) = blocks.a.shape();
    if k == 0 {
        return Ok(Matrix::zeros(r, s));
    }
    let fd = fit_nmf(&blocks.d, k, opts)?;
    match mode {
        NmfResidualMode::Simple => {
            let left = blocks.b.matmul(&pinv_default(&fd.h)?)?;
            let right = pinv_default(&fd.w)?.matmul(&blocks.c)?;
            left.matmul(&right)
        }
        NmfResidualMode::Conforming => {
            // W_A = argmin_{W ≥ 0} ‖B - W H_D‖, H_A = argmin_{H ≥ 0} ‖C - W_D H‖.
            let wa = solve_gram_rows(&fd.h.matmul_unchecked(&fd.h.transpose()), &blocks.b.matmul(&fd.h.transpose())?).0;
            let ha = solve_gram_rows(&fd.w.t_matmul(&fd.w)?, &blocks.c.t_matmul(&fd.w)?).0.transpose();
            wa.matmul(&ha)
        }
    }
}

/// Held-out residual `A - Â` for the NMF at rank `k`; `k = 0` returns `A`.
pub fn nmf_holdout_residual<T: Scalar>(
    blocks: &Blocks<T>,
    k: usize,
    mode: NmfResidualMode,
    opts: &NmfOptions,
) -> Result<Matrix<T>> {
    blocks.a.sub(&nmf_holdout_prediction(blocks, k, mode, opts)?)
}

/// Seed of the fit for fold `(i, j)` at rank `k`.
pub fn fold_fit_seed(base_seed: u64, fold_id: (usize, usize), k: usize) -> u64 {
    Rng::new(base_seed)
        .child_indexed("bcv-nmf", &[fold_id.0 as u64, fold_id.1 as u64, k as u64])
        .seed()
}

/// `BCV(k)` for the NMF: the fit of `D` for each (fold, rank) pair uses its
/// own labeled stream, so results do not depend on evaluation order.
pub fn bcv_nmf_curve<T: Scalar>(
    x: &Matrix<T>,
    plan: &HoldoutPlan,
    ranks: &[usize],
    mode: NmfResidualMode,
    opts: &NmfOptions,
) -> Result<BcvCurve> {
    opts.validate()?;
    check_nonnegative(x, "NMF input")?;
    plan.check_dims(x.rows(), x.cols())?;
    crate::bcv_svd::validate_ranks(ranks, plan.max_fit_rank())?;
    let folds = plan.folds();
    let blocks: Vec<Blocks<T>> = folds.iter().map(|f| split_blocks(x, f)).collect::<Result<_>>()?;
    let jobs: Vec<(usize, usize)> =
        (0..folds.len()).flat_map(|f| (0..ranks.len()).map(move |ri| (f, ri))).collect();
    let results: Vec<f64> = jobs
        .par_iter()
        .map(|&(f, ri)| {
            let k = ranks[ri];
            let fold_opts = NmfOptions { seed: fold_fit_seed(opts.seed, folds[f].fold_id, k), ..opts.clone() };
            let res = nmf_holdout_residual(&blocks[f], k, mode, &fold_opts)?;
            Ok(res.frob_norm_sq().to_f64_lossy())
        })
        .collect::<Result<_>>()?;
    let per_fold: Vec<Vec<f64>> = results.chunks(ranks.len()).map(|c| c.to_vec()).collect();
    let mut scores = vec![0.0; ranks.len()];
    for row in &per_fold {
        for (acc, v) in scores.iter_mut().zip(row) {
            *acc += v;
        }
    }
    let mut md = CurveMetadata::new("bcv-nmf");
    md.mode = Some(mode.as_str().into());
    md.seed = Some(plan.seed());
    md.plan = Some(plan.clone());
    md.params.insert("nmf_seed".into(), opts.seed.into());
    md.params.insert("nmf_restarts".into(), opts.restarts.into());
    md.params.insert("nmf_max_iterations".into(), opts.max_outer_iterations.into());
    md.params.insert("nmf_tolerance".into(), opts.relative_tolerance.into());
    let mut curve = BcvCurve::new(ranks.to_vec(), scores, md)?;
    curve.per_fold = Some(per_fold);
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::holdout::Fold;
    use crate::random::sample_uniform;

    fn kkt_ok(m: &Matrix<f64>, w: &Matrix<f64>, h: &Matrix<f64>) -> bool {
        let grad = w.t_matmul(&w.matmul(h).unwrap().sub(m).unwrap()).unwrap();
        let scale = w.t_matmul(m).unwrap().max_abs();
        let tol = NNLS_KKT_TOLERANCE * scale;
        (0..h.rows()).all(|i| {
            (0..h.cols()).all(|j| {
                let g = grad.get(i, j);
                let v = h.get(i, j);
                v >= 0.0 && if v > 0.0 { g.abs() <= tol } else { g >= -tol }
            })
        })
    }

    #[test]
    fn identity_design_projects() {
        let m = Matrix::from_rows(&[[1.0f64, -2.0], [-0.5, 3.0], [0.0, 4.0]]).unwrap();
        let h = nnls_solve(&m, &Matrix::identity(3)).unwrap();
        assert_eq!(h, m.map(|v| v.max(0.0)));
    }

    #[test]
    fn inactive_constraints_give_least_squares() {
        let w = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]).unwrap();
        let truth = Matrix::from_rows(&[[2.0], [3.0]]).unwrap();
        let m = w.matmul(&truth).unwrap();
        let h = nnls_solve(&m, &w).unwrap();
        assert!(h.sub(&truth).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn zero_column_is_pinned() {
        let w = Matrix::from_rows(&[[1.0f64, 0.0], [2.0, 0.0]]).unwrap();
        let m = Matrix::from_rows(&[[1.0], [2.0]]).unwrap();
        let s = nnls_solve_detailed(&m, &w).unwrap();
        assert_eq!(s.pinned_rows, vec![1]);
        assert_eq!(s.x.get(1, 0), 0.0);
        assert!((s.x.get(0, 0) - 1.0).abs() < 1e-12);
        assert!(nnls_solve(&Matrix::<f64>::zeros(3, 1), &w).is_err());
    }

    #[test]
    fn random_problems_satisfy_kkt() {
        let mut rng = Rng::new(5);
        for _ in 0..50 {
            let w: Matrix<f64> = crate::random::sample_gaussian(8, 4, &mut rng);
            let m: Matrix<f64> = crate::random::sample_gaussian(8, 3, &mut rng);
            let h = nnls_solve(&m, &w).unwrap();
            assert!(kkt_ok(&m, &w, &h));
        }
    }

    #[test]
    fn rank_one_and_identity_fits() {
        let x = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]).unwrap();
        let f = fit_nmf(&x, 1, &NmfOptions::standalone()).unwrap();
        assert!(f.objective <= 1e-10 * x.frob_norm_sq());
        let i2 = Matrix::<f64>::identity(2);
        let f = fit_nmf(&i2, 2, &NmfOptions::standalone()).unwrap();
        assert!(f.objective <= 1e-10);
        let f0 = fit_nmf(&x, 0, &NmfOptions::standalone()).unwrap();
        assert_eq!(f0.objective, 25.0);
        assert_eq!(f0.w.shape(), (2, 0));
    }

    #[test]
    fn fit_errors() {
        let neg = Matrix::from_rows(&[[1.0, -1.0]]).unwrap();
        assert!(matches!(fit_nmf(&neg, 1, &NmfOptions::default()), Err(Error::Domain(_))));
        let x = Matrix::<f64>::identity(2);
        assert!(matches!(fit_nmf(&x, 3, &NmfOptions::default()), Err(Error::InvalidRank { .. })));
        let bad = NmfOptions { restarts: 0, ..NmfOptions::default() };
        assert!(fit_nmf(&x, 1, &bad).is_err());
    }

    #[test]
    fn factors_nonnegative_and_objective_exact() {
        let x: Matrix<f64> = sample_uniform(12, 9, &mut Rng::new(4));
        let f = fit_nmf(&x, 3, &NmfOptions::standalone().with_seed(2)).unwrap();
        assert!(f.w.min_entry().unwrap() >= 0.0);
        assert!(f.h.min_entry().unwrap() >= 0.0);
        assert!(f.monotone);
        let direct = x.sub(&f.product()).unwrap().frob_norm_sq();
        assert!((f.objective - direct).abs() <= 1e-8 * direct.max(1e-300));
    }

    #[test]
    fn rank_zero_residual_is_a() {
        let x: Matrix<f64> = sample_uniform(6, 6, &mut Rng::new(1));
        let fold = Fold { held_rows: vec![0, 1], held_cols: vec![2], fold_id: (0, 0) };
        let b = split_blocks(&x, &fold).unwrap();
        for mode in [NmfResidualMode::Simple, NmfResidualMode::Conforming] {
            assert_eq!(nmf_holdout_residual(&b, 0, mode, &NmfOptions::for_bcv()).unwrap(), b.a);
        }
    }

    #[test]
    fn zero_matrix_scores_zero() {
        let x = Matrix::<f64>::zeros(6, 6);
        let plan = HoldoutPlan::new(6, 6, 2, 2, 0).unwrap();
        let c = bcv_nmf_curve(&x, &plan, &[0, 1, 2], NmfResidualMode::Conforming, &NmfOptions::for_bcv()).unwrap();
        assert!(c.scores.iter().all(|&s| s == 0.0));
    }
}
