//! Synthetic data models and the replication harness that compares rank
//! selectors against the oracle rank.
//!
//! Two data models are provided. In the Gaussian model `X = μ + Z`, where
//! `μ = U diag(τ) Vᵀ` takes its singular vectors from a Gaussian draw. The
//! Poisson topic model has `X ~ Poisson(ε + W H)` with block-structured
//! topics.

use crate::baselines::{bic_curve, ek_curve, BicVariant};
use crate::bcv_svd::{bcv_svd_curve, ResidualMode};
use crate::curve::BcvCurve;
use crate::error::{Error, Result};
use crate::holdout::HoldoutPlan;
use crate::linalg::svd;
use crate::matrix::Matrix;
use crate::nmf::{bcv_nmf_curve, fit_nmf, NmfOptions, NmfResidualMode};
use crate::parse::{format_ranks, parse_folds, parse_rank_range};
use crate::random::sample_gaussian;
use crate::rng::Rng;
use crate::scalar::Scalar;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Shape of the signal's singular values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignalPattern {
    /// `k` equal positive values, then zeros.
    Binary(usize),
    /// `τᵢ ∝ 2^(1-i)` for every `i ≤ min(m, n)`.
    Geometric,
}

/// Signal-plus-Gaussian-noise model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignalSpec {
    pub m: usize,
    pub n: usize,
    pub pattern: SignalPattern,
    /// `ρ = ‖μ‖² / E‖Z‖² = Στᵢ² / (mn)`.
    pub signal_ratio: f64,
}

impl SignalSpec {
    pub fn new(m: usize, n: usize, pattern: SignalPattern, signal_ratio: f64) -> Result<Self> {
        let s = SignalSpec { m, n, pattern, signal_ratio };
        s.validate()?;
        Ok(s)
    }

    /// Spec whose leading component has strength `δ = τ₁²/√(mn)`.
    pub fn from_delta(m: usize, n: usize, pattern: SignalPattern, delta: f64) -> Result<Self> {
        let shape = Self::new(m, n, pattern, 1.0)?.shape();
        let sum: f64 = shape.iter().map(|t| t * t).sum();
        let rho = if sum == 0.0 { 0.0 } else { delta * ((m * n) as f64).sqrt() * sum / (shape[0] * shape[0]) / (m * n) as f64 };
        Self::new(m, n, pattern, rho)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 {
            return Err(Error::InvalidArgument("signal dimensions must be positive".into()));
        }
        if !(self.signal_ratio >= 0.0 && self.signal_ratio.is_finite()) {
            return Err(Error::InvalidArgument(format!("signal_ratio {} must be >= 0", self.signal_ratio)));
        }
        if let SignalPattern::Binary(k) = self.pattern {
            if k > self.m.min(self.n) {
                return Err(Error::InvalidRank { rank: k, reason: format!("exceeds min(m, n) = {}", self.m.min(self.n)) });
            }
        }
        Ok(())
    }

    fn shape(&self) -> Vec<f64> {
        let p = self.m.min(self.n);
        match self.pattern {
            SignalPattern::Binary(k) => (0..p).map(|i| if i < k { 1.0 } else { 0.0 }).collect(),
            SignalPattern::Geometric => (0..p).map(|i| 0.5f64.powi(i as i32)).collect(),
        }
    }

    /// Singular values `τ`, scaled so that `Στᵢ² = ρ mn`.
    pub fn tau(&self) -> Vec<f64> {
        let shape = self.shape();
        let sum: f64 = shape.iter().map(|t| t * t).sum();
        if sum == 0.0 {
            return shape;
        }
        let scale = (self.signal_ratio * (self.m * self.n) as f64 / sum).sqrt();
        shape.iter().map(|t| t * scale).collect()
    }

    /// Per-component strength `δ = τ₁²/√(mn)`.
    pub fn delta(&self) -> f64 {
        self.tau().first().map_or(0.0, |t| t * t / ((self.m * self.n) as f64).sqrt())
    }
}

/// `μ = U diag(τ) Vᵀ` with `U`, `V` the singular vectors of a Gaussian draw.
pub fn make_signal<T: Scalar>(spec: &SignalSpec, rng: &mut Rng) -> Result<Matrix<T>> {
    spec.validate()?;
    let y: Matrix<f64> = sample_gaussian(spec.m, spec.n, rng);
    let f = svd(&y)?;
    let tau = spec.tau();
    let mut scaled_u = f.u.clone();
    for i in 0..spec.m {
        for (j, t) in tau.iter().enumerate() {
            scaled_u[(i, j)] *= t;
        }
    }
    Ok(scaled_u.matmul(&f.v.transpose())?.cast())
}

/// `‖X̂⁽ᵏ⁾ - μ‖²` for each rank, with `X̂⁽ᵏ⁾` the rank-`k` truncated SVD.
pub fn svd_true_errors<T: Scalar>(mu: &Matrix<T>, x: &Matrix<T>, ranks: &[usize]) -> Result<Vec<f64>> {
    if mu.shape() != x.shape() {
        return Err(Error::Dimension(format!("mu is {:?} but X is {:?}", mu.shape(), x.shape())));
    }
    let f = svd(&x.cast::<f64>())?;
    let kmax = ranks.iter().copied().max().unwrap_or(0);
    if kmax > f.len() {
        return Err(Error::InvalidRank { rank: kmax, reason: format!("exceeds min(m, n) = {}", f.len()) });
    }
    let mut resid = mu.cast::<f64>();
    let mut errs = vec![resid.frob_norm_sq()];
    for t in 0..kmax {
        let s = f.sigma[t];
        for i in 0..resid.rows() {
            let a = s * f.u.get(i, t);
            if a == 0.0 {
                continue;
            }
            for j in 0..resid.cols() {
                resid[(i, j)] -= a * f.v.get(j, t);
            }
        }
        errs.push(resid.frob_norm_sq());
    }
    Ok(ranks.iter().map(|&k| errs[k]).collect())
}

/// Errors within this fraction of `‖μ‖² + ‖X‖²` of the minimum count as ties.
const ORACLE_TIE_TOLERANCE: f64 = 1e-10;

fn argmin_with_ties(ranks: &[usize], errors: &[f64], scale: f64) -> usize {
    let min = errors.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = ORACLE_TIE_TOLERANCE * scale;
    ranks
        .iter()
        .zip(errors)
        .filter(|(_, &e)| e <= min + tol)
        .map(|(&k, _)| k)
        .min()
        .expect("nonempty ranks")
}

/// Smallest rank minimizing `‖X̂⁽ᵏ⁾ - μ‖²`; errors equal up to roundoff tie.
pub fn oracle_rank<T: Scalar>(mu: &Matrix<T>, x: &Matrix<T>, ranks: &[usize]) -> Result<usize> {
    if ranks.is_empty() {
        return Err(Error::InvalidArgument("empty rank list".into()));
    }
    let errs = svd_true_errors(mu, x, ranks)?;
    let scale = mu.frob_norm_sq().to_f64_lossy() + x.frob_norm_sq().to_f64_lossy();
    Ok(argmin_with_ties(ranks, &errs, scale))
}

/// `error / oracle error`, defined as 1 when the two agree to roundoff.
fn regret(err: f64, best: f64, scale: f64) -> f64 {
    if err <= best + ORACLE_TIE_TOLERANCE * scale {
        1.0
    } else {
        err / best
    }
}

/// Poisson topic-corpus model. Documents (rows) fall into `k_true`
/// contiguous blocks, each dominated by one topic whose vocabulary is a
/// contiguous block of words (columns).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub m: usize,
    pub n: usize,
    pub k_true: usize,
    /// Mean of `W H`, which is also the added background level `ε`.
    pub intensity: f64,
    /// Weight a document puts on topics other than its own, in `[0, 1)`.
    pub off_topic: f64,
    /// Share of a topic's mass spread over words outside its block.
    pub leakage: f64,
    /// Relative spread of document lengths and word weights, in `[0, 1)`.
    pub heterogeneity: f64,
}

impl CorpusSpec {
    pub fn new(m: usize, n: usize, k_true: usize) -> Self {
        CorpusSpec { m, n, k_true, intensity: 1.0, off_topic: 0.05, leakage: 0.05, heterogeneity: 0.5 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 || self.k_true == 0 {
            return Err(Error::InvalidArgument("corpus needs m, n, k_true >= 1".into()));
        }
        if self.k_true > self.m.min(self.n) {
            return Err(Error::InvalidRank { rank: self.k_true, reason: "exceeds min(m, n)".into() });
        }
        if !(self.intensity > 0.0 && self.intensity.is_finite()) {
            return Err(Error::InvalidArgument(format!("intensity {} must be positive", self.intensity)));
        }
        for (name, v) in [("off_topic", self.off_topic), ("leakage", self.leakage), ("heterogeneity", self.heterogeneity)] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::InvalidArgument(format!("{} = {} must lie in [0, 1)", name, v)));
            }
        }
        Ok(())
    }

    /// Nonnegative topic factors `(W, H)` with `mean(W H) = intensity`.
    pub fn topic_factors(&self, rng: &mut Rng) -> Result<(Matrix<f64>, Matrix<f64>)> {
        self.validate()?;
        let (m, n, k) = (self.m, self.n, self.k_true);
        let het = self.heterogeneity;
        // Evenly spaced multipliers in random order keep the spectrum of
        // W H nearly identical across draws.
        let stratified = |count: usize, rng: &mut Rng| {
            let mut v: Vec<f64> =
                (0..count).map(|i| 1.0 + het * (2.0 * (i as f64 + 0.5) / count as f64 - 1.0)).collect();
            rng.shuffle(&mut v);
            v
        };
        let lengths = stratified(m, rng);
        let mut w = Matrix::zeros(m, k);
        for i in 0..m {
            let own = i * k / m;
            for t in 0..k {
                let share = if t == own {
                    1.0 - self.off_topic
                } else {
                    self.off_topic / (k - 1) as f64 * 2.0 * rng.uniform()
                };
                w[(i, t)] = lengths[i] * share;
            }
        }
        let mut h = Matrix::zeros(k, n);
        for t in 0..k {
            let lo = t * n / k;
            let hi = (t + 1) * n / k;
            let inside = (hi - lo).max(1) as f64;
            let outside = (n - (hi - lo)).max(1) as f64;
            let weights = stratified(n, rng);
            for j in 0..n {
                let base = if (lo..hi).contains(&j) { (1.0 - self.leakage) / inside } else { self.leakage / outside };
                h[(t, j)] = base * weights[j];
            }
        }
        let wh = w.matmul(&h)?;
        let scale = self.intensity / wh.mean();
        Ok((w.scale(scale), h))
    }

    /// `(μ, X)` with `μ = ε + W H`, `ε = mean(W H)`, `X ~ Poisson(μ)`.
    pub fn generate(&self, rng: &mut Rng) -> Result<(Matrix<f64>, Matrix<f64>)> {
        let (w, h) = self.topic_factors(&mut rng.child("topics"))?;
        let wh = w.matmul(&h)?;
        let eps = wh.mean();
        let mu = wh.map(|v| v + eps);
        Ok((mu.clone(), sample_poisson(&mu, &mut rng.child("counts"))))
    }
}

/// Entrywise independent Poisson draws with means `mu`.
pub fn sample_poisson(mu: &Matrix<f64>, rng: &mut Rng) -> Matrix<f64> {
    Matrix::from_fn(mu.rows(), mu.cols(), |i, j| rng.poisson(mu.get(i, j)))
}

/// Poisson corpus with default topic-shape settings.
pub fn make_poisson_corpus(m: usize, n: usize, k_true: usize, rng: &mut Rng) -> Result<(Matrix<f64>, Matrix<f64>)> {
    CorpusSpec::new(m, n, k_true).generate(rng)
}

/// A rank selector run by the harness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    BcvSvd(ResidualMode),
    BcvNmf(NmfResidualMode),
    Bic(BicVariant),
    Ek,
}

impl Method {
    fn is_nmf(&self) -> bool {
        matches!(self, Method::BcvNmf(_))
    }

    fn uses_folds(&self) -> bool {
        !matches!(self, Method::Bic(_))
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::BcvSvd(m) => write!(f, "bcv-svd-{}", m),
            Method::BcvNmf(m) => write!(f, "bcv-nmf-{}", m),
            Method::Bic(v) => write!(f, "{}", v),
            Method::Ek => f.write_str("ek"),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(mode) = s.strip_prefix("bcv-svd-") {
            return Ok(Method::BcvSvd(mode.parse()?));
        }
        if let Some(mode) = s.strip_prefix("bcv-nmf-") {
            return Ok(Method::BcvNmf(mode.parse()?));
        }
        if s == "ek" {
            return Ok(Method::Ek);
        }
        s.parse::<BicVariant>()
            .ok()
            .filter(|_| s.starts_with("bic"))
            .map(Method::Bic)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method '{}'", s)))
    }
}

/// A method with optional per-method folds, written `method` or
/// `method@HxL`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct MethodSpec {
    pub method: Method,
    pub folds: Option<(usize, usize)>,
}

impl MethodSpec {
    pub fn new(method: Method) -> Self {
        MethodSpec { method, folds: None }
    }

    pub fn with_folds(method: Method, h: usize, l: usize) -> Self {
        MethodSpec { method, folds: Some((h, l)) }
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.folds {
            Some((h, l)) if self.method.uses_folds() => write!(f, "{}@{}x{}", self.method, h, l),
            _ => write!(f, "{}", self.method),
        }
    }
}

impl FromStr for MethodSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().split_once('@') {
            Some((m, folds)) => {
                let (h, l) = parse_folds(folds)?;
                Ok(MethodSpec::with_folds(m.parse()?, h, l))
            }
            None => Ok(MethodSpec::new(s.trim().parse()?)),
        }
    }
}

impl TryFrom<String> for MethodSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<MethodSpec> for String {
    fn from(m: MethodSpec) -> String {
        m.to_string()
    }
}

/// Data model of an experiment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DataSpec {
    Signal(SignalSpec),
    Corpus(CorpusSpec),
}

impl DataSpec {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            DataSpec::Signal(s) => (s.m, s.n),
            DataSpec::Corpus(c) => (c.m, c.n),
        }
    }
}

/// One experimental setting, loadable from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub data: DataSpec,
    pub methods: Vec<MethodSpec>,
    /// Folds for methods that do not set their own, as `HxL`.
    #[serde(default = "default_folds")]
    pub folds: String,
    /// Candidate ranks as `a..b`.
    pub ranks: String,
    #[serde(default = "default_reps")]
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    /// Keep one signal for all replications and redraw only the noise.
    #[serde(default)]
    pub fixed_mu: bool,
}

fn default_folds() -> String {
    "3x3".into()
}

fn default_reps() -> usize {
    10
}

impl ExperimentConfig {
    pub fn rank_list(&self) -> Result<Vec<usize>> {
        parse_rank_range(&self.ranks)
    }

    pub fn default_folds(&self) -> Result<(usize, usize)> {
        parse_folds(&self.folds)
    }

    fn folds_for(&self, spec: &MethodSpec) -> Result<(usize, usize)> {
        match spec.folds {
            Some(f) => Ok(f),
            None => self.default_folds(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.data {
            DataSpec::Signal(s) => s.validate()?,
            DataSpec::Corpus(c) => c.validate()?,
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidArgument(format!("experiment '{}' lists no methods", self.name)));
        }
        if self.replications == 0 {
            return Err(Error::InvalidArgument("replications must be >= 1".into()));
        }
        let ranks = self.rank_list()?;
        let (m, n) = self.data.shape();
        let kmax = *ranks.iter().max().expect("nonempty range");
        if kmax > m.min(n) {
            return Err(Error::InvalidRank { rank: kmax, reason: format!("exceeds min(m, n) = {}", m.min(n)) });
        }
        for spec in &self.methods {
            if let (DataSpec::Signal(_), true) = (&self.data, spec.method.is_nmf()) {
                return Err(Error::InvalidArgument(format!("{} needs nonnegative data; use a corpus model", spec)));
            }
            if spec.method.uses_folds() {
                let (h, l) = self.folds_for(spec)?;
                if h > m || l > n {
                    return Err(Error::InvalidArgument(format!("{}: folds {}x{} exceed {}x{}", spec, h, l, m, n)));
                }
                let fit = (m - m.div_ceil(h)).min(n - n.div_ceil(l));
                if kmax > fit {
                    return Err(Error::InvalidRank {
                        rank: kmax,
                        reason: format!("{} can fit at most rank {}", spec, fit),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: ExperimentConfig = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }
}

/// Results of one method across replications.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MethodOutcome {
    pub method: String,
    pub selected: Vec<usize>,
    /// `‖X̂⁽ᵏ̂⁾ - μ‖²` per replication.
    pub true_error: Vec<f64>,
    pub regret: Vec<f64>,
    pub scores: Vec<Vec<Option<f64>>>,
    pub mean_selected: f64,
    pub mean_regret: f64,
}

/// Aggregated results of one [`ExperimentConfig`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub ranks: Vec<usize>,
    /// Seed of each replication's stream.
    pub replication_seeds: Vec<u64>,
    /// `δ = τ₁²/√(mn)` for signal models.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Oracle rank of the truncated SVD per replication.
    pub oracle_svd: Vec<usize>,
    /// Oracle rank of the NMF, when an NMF method is present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_nmf: Option<Vec<usize>>,
    pub methods: Vec<MethodOutcome>,
}

impl ExperimentReport {
    pub fn mean_oracle(&self) -> f64 {
        mean_usize(&self.oracle_svd)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn mean_usize(v: &[usize]) -> f64 {
    v.iter().sum::<usize>() as f64 / v.len().max(1) as f64
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

struct ReplicationResult {
    seed: u64,
    oracle_svd: usize,
    oracle_nmf: Option<usize>,
    per_method: Vec<(usize, f64, f64, Vec<Option<f64>>)>,
}

fn run_replication(cfg: &ExperimentConfig, ranks: &[usize], rep: usize) -> Result<ReplicationResult> {
    let root = Rng::new(cfg.seed);
    let rep_rng = root.child_indexed("replication", &[rep as u64]);
    let (mu, x): (Matrix<f64>, Matrix<f64>) = match &cfg.data {
        DataSpec::Signal(spec) => {
            let mut signal_rng = if cfg.fixed_mu { root.child("signal") } else { rep_rng.child("signal") };
            let mu = make_signal::<f64>(spec, &mut signal_rng)?;
            let z: Matrix<f64> = sample_gaussian(spec.m, spec.n, &mut rep_rng.child("noise"));
            let x = mu.add(&z)?;
            (mu, x)
        }
        DataSpec::Corpus(spec) => {
            if cfg.fixed_mu {
                let (w, h) = spec.topic_factors(&mut root.child("signal").child("topics"))?;
                let wh = w.matmul(&h)?;
                let eps = wh.mean();
                let mu = wh.map(|v| v + eps);
                let x = sample_poisson(&mu, &mut rep_rng.child("counts"));
                (mu, x)
            } else {
                spec.generate(&mut rep_rng.child("signal"))?
            }
        }
    };
    let scale = mu.frob_norm_sq() + x.frob_norm_sq();
    let svd_errors = svd_true_errors(&mu, &x, ranks)?;
    let oracle_svd = argmin_with_ties(ranks, &svd_errors, scale);
    let svd_best = svd_errors.iter().copied().fold(f64::INFINITY, f64::min);
    let nmf_opts = NmfOptions::standalone().with_seed(rep_rng.child("nmf").seed());
    let nmf_errors = if cfg.methods.iter().any(|m| m.method.is_nmf()) {
        Some(
            ranks
                .iter()
                .map(|&k| Ok(fit_nmf(&x, k, &nmf_opts)?.product().dist_sq(&mu)?))
                .collect::<Result<Vec<f64>>>()?,
        )
    } else {
        None
    };
    let oracle_nmf = nmf_errors.as_ref().map(|e| argmin_with_ties(ranks, e, scale));
    let mut per_method = Vec::with_capacity(cfg.methods.len());
    for (mi, spec) in cfg.methods.iter().enumerate() {
        let plan = if spec.method.uses_folds() {
            let (h, l) = cfg.folds_for(spec)?;
            Some(HoldoutPlan::new(x.rows(), x.cols(), h, l, rep_rng.child_indexed("plan", &[mi as u64]).seed())?)
        } else {
            None
        };
        let curve: BcvCurve = match (spec.method, &plan) {
            (Method::BcvSvd(mode), Some(p)) => bcv_svd_curve(&x, p, ranks, mode)?,
            (Method::BcvNmf(mode), Some(p)) => {
                let opts = NmfOptions::for_bcv().with_seed(rep_rng.child_indexed("bcv-nmf", &[mi as u64]).seed());
                bcv_nmf_curve(&x, p, ranks, mode, &opts)?
            }
            (Method::Ek, Some(p)) => ek_curve(&x, p, ranks)?,
            (Method::Bic(v), _) => bic_curve(&x, ranks, v)?,
            _ => unreachable!("fold-based methods always get a plan"),
        };
        let k = curve.selected_rank;
        let idx = ranks.iter().position(|&r| r == k).expect("selected rank is a candidate");
        let (errs, best) = match &nmf_errors {
            Some(e) if spec.method.is_nmf() => (e, e.iter().copied().fold(f64::INFINITY, f64::min)),
            _ => (&svd_errors, svd_best),
        };
        let err = errs[idx];
        let scores = curve.scores.iter().map(|&s| s.is_finite().then_some(s)).collect();
        per_method.push((k, err, regret(err, best, scale), scores));
    }
    Ok(ReplicationResult { seed: rep_rng.seed(), oracle_svd, oracle_nmf, per_method })
}

/// Runs every replication of `cfg`. Replications run in parallel on
/// independent labeled streams and are aggregated in replication order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let ranks = cfg.rank_list()?;
    let reps: Vec<ReplicationResult> = (0..cfg.replications)
        .into_par_iter()
        .map(|rep| {
            log::info!("{}: replication {}", cfg.name, rep + 1);
            run_replication(cfg, &ranks, rep)
        })
        .collect::<Result<_>>()?;
    let methods = cfg
        .methods
        .iter()
        .enumerate()
        .map(|(mi, spec)| {
            let selected: Vec<usize> = reps.iter().map(|r| r.per_method[mi].0).collect();
            let true_error: Vec<f64> = reps.iter().map(|r| r.per_method[mi].1).collect();
            let regret: Vec<f64> = reps.iter().map(|r| r.per_method[mi].2).collect();
            MethodOutcome {
                method: spec.to_string(),
                mean_selected: mean_usize(&selected),
                mean_regret: mean(&regret),
                scores: reps.iter().map(|r| r.per_method[mi].3.clone()).collect(),
                selected,
                true_error,
                regret,
            }
        })
        .collect();
    let oracle_nmf = cfg.methods.iter().any(|m| m.method.is_nmf()).then(|| reps.iter().map(|r| r.oracle_nmf.unwrap_or(0)).collect());
    Ok(ExperimentReport {
        config: cfg.clone(),
        ranks,
        replication_seeds: reps.iter().map(|r| r.seed).collect(),
        delta: match &cfg.data {
            DataSpec::Signal(s) => Some(s.delta()),
            DataSpec::Corpus(_) => None,
        },
        oracle_svd: reps.iter().map(|r| r.oracle_svd).collect(),
        oracle_nmf,
        methods,
    })
}

/// Reports of several settings, rendered together.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub experiments: Vec<ExperimentReport>,
}

impl SuiteReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per (setting, method), with the oracle as method `oracle`:
    /// `experiment  pattern  signal  method  mean_k  mean_regret`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("experiment\tpattern\tsignal\tmethod\tmean_k\tmean_regret\n");
        for e in &self.experiments {
            let (pattern, signal) = match &e.config.data {
                DataSpec::Signal(s) => (
                    match s.pattern {
                        SignalPattern::Binary(k) => format!("binary{}", k),
                        SignalPattern::Geometric => "geometric".into(),
                    },
                    format!("{}", s.signal_ratio),
                ),
                DataSpec::Corpus(c) => (format!("corpus{}", c.k_true), format!("{}", c.intensity)),
            };
            out.push_str(&format!("{}\t{}\t{}\toracle\t{}\t1\n", e.config.name, pattern, signal, e.mean_oracle()));
            for mo in &e.methods {
                out.push_str(&format!(
                    "{}\t{}\t{}\t{}\t{}\t{}\n",
                    e.config.name, pattern, signal, mo.method, mo.mean_selected, mo.mean_regret
                ));
            }
        }
        out
    }
}

pub fn run_suite(configs: &[ExperimentConfig]) -> Result<SuiteReport> {
    Ok(SuiteReport { experiments: configs.iter().map(run_experiment).collect::<Result<_>>()? })
}

/// Named collections of settings mirroring the published comparison.
///
/// `table2-desk` runs 200x200 matrices with a rank-10 binary signal;
/// `table2-full` runs the original 1000x1000 rank-50 setting and takes
/// tens of minutes. Both cover binary and geometric patterns at
/// `ρ ∈ {1, 0.1, 0.01}`.
pub fn preset(name: &str, replications: usize, seed: u64) -> Result<Vec<ExperimentConfig>> {
    let (dim, k, ranks, methods): (usize, usize, &str, Vec<MethodSpec>) = match name {
        "table2-desk" => (
            200,
            10,
            "0..40",
            vec![
                MethodSpec::with_folds(Method::BcvSvd(ResidualMode::TypeI), 5, 5),
                MethodSpec::with_folds(Method::BcvSvd(ResidualMode::TypeI), 2, 2),
                MethodSpec::new(Method::Bic(BicVariant::Bic1)),
                MethodSpec::new(Method::Bic(BicVariant::Bic2)),
                MethodSpec::new(Method::Bic(BicVariant::Bic3)),
            ],
        ),
        "table2-full" => (
            1000,
            50,
            "0..100",
            vec![
                MethodSpec::with_folds(Method::BcvSvd(ResidualMode::TypeI), 5, 5),
                MethodSpec::with_folds(Method::BcvSvd(ResidualMode::TypeI), 2, 2),
                MethodSpec::new(Method::Bic(BicVariant::Bic1)),
                MethodSpec::new(Method::Bic(BicVariant::Bic2)),
                MethodSpec::new(Method::Bic(BicVariant::Bic3)),
            ],
        ),
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown preset '{}'; available: table2-desk, table2-full",
                other
            )))
        }
    };
    let mut out = Vec::new();
    for (pname, pattern) in [("binary", SignalPattern::Binary(k)), ("geometric", SignalPattern::Geometric)] {
        for (sname, rho) in [("high", 1.0), ("medium", 0.1), ("low", 0.01)] {
            out.push(ExperimentConfig {
                name: format!("{}-{}", pname, sname),
                data: DataSpec::Signal(SignalSpec::new(dim, dim, pattern, rho)?),
                methods: methods.clone(),
                folds: "2x2".into(),
                ranks: ranks.into(),
                replications,
                seed,
                fixed_mu: false,
            });
        }
    }
    Ok(out)
}

/// Rank list formatted for reports.
pub fn describe_ranks(ranks: &[usize]) -> String {
    format_ranks(ranks)
}
