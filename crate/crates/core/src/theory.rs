//! Closed-form random-matrix predictions for BCV of the truncated SVD under
//! Gaussian noise: Tracy–Widom centering, pure-noise expectations,
//! weak-factor limits and the 2x2 table of expected excess errors.

use crate::error::{Error, Result};
use serde::Serialize;

/// Parameters of the rank-one weak-factor model.
///
/// `c = m/n` is the aspect ratio, `delta` the signal strength with
/// `κ² = δ√(mn)`, `theta` the common holdout fraction `r/m = s/n` and `eta`
/// a lower bound on the retained share of each singular vector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TheoryParams {
    pub c: f64,
    pub delta: f64,
    pub theta: f64,
    pub eta: f64,
}

impl TheoryParams {
    pub fn new(c: f64, delta: f64, theta: f64, eta: f64) -> Result<Self> {
        let p = TheoryParams { c, delta, theta, eta };
        p.validate()?;
        Ok(p)
    }

    /// Derives `c = m/n` and `theta = r/m`; requires `r/m = s/n`.
    pub fn from_dims(m: usize, n: usize, r: usize, s: usize, delta: f64, eta: f64) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::InvalidArgument("m and n must be positive".into()));
        }
        let (tr, ts) = (r as f64 / m as f64, s as f64 / n as f64);
        if (tr - ts).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("holdout fractions differ: r/m = {} but s/n = {}", tr, ts)));
        }
        Self::new(m as f64 / n as f64, delta, tr, eta)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Domain(format!("aspect ratio c = {} must be positive", self.c)));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::Domain(format!("delta = {} must be positive", self.delta)));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::Domain(format!("theta = {} must lie in (0, 1)", self.theta)));
        }
        if !(self.eta > 0.5 && self.eta <= 1.0) {
            return Err(Error::Domain(format!("eta = {} must lie in (1/2, 1]", self.eta)));
        }
        Ok(())
    }

    /// `d₁ = κ²/n = δ√c`.
    pub fn d1(&self) -> f64 {
        self.delta * self.c.sqrt()
    }

    /// Checks a separately supplied `d₁` against `δ√c`.
    pub fn check_d1(&self, d1: f64) -> Result<()> {
        let want = self.d1();
        if (d1 - want).abs() > 1e-9 * want.abs().max(1.0) {
            return Err(Error::InvalidArgument(format!("d1 = {} disagrees with delta * sqrt(c) = {}", d1, want)));
        }
        Ok(())
    }
}

/// Centering and scaling constants for the largest eigenvalue of a white
/// Wishart matrix, `m >= n`.
pub fn tw_center_scale(m: usize, n: usize) -> Result<(f64, f64)> {
    if m < 2 || n < 1 {
        return Err(Error::InvalidArgument(format!("need m >= 2 and n >= 1, got {}x{}", m, n)));
    }
    if m < n {
        return Err(Error::InvalidArgument(format!("need m >= n, got {}x{}; transpose first", m, n)));
    }
    let a = ((m - 1) as f64).sqrt();
    let b = (n as f64).sqrt();
    let mu = (a + b).powi(2);
    let sigma = (a + b) * (1.0 / a + 1.0 / b).cbrt();
    Ok((mu, sigma))
}

/// `(E BCV(0), E BCV(1)) / (mn)` for pure unit-variance Gaussian noise.
pub fn pure_noise_expectations(m: usize, n: usize, r: usize, s: usize) -> Result<(f64, f64)> {
    if r == 0 || r >= m || s == 0 || s >= n {
        return Err(Error::InvalidArgument(format!(
            "need 0 < r < m and 0 < s < n, got m={} n={} r={} s={}",
            m, n, r, s
        )));
    }
    let root = ((m - r) as f64).sqrt() + ((n - s) as f64).sqrt();
    Ok((1.0, 1.0 + root.powi(-2)))
}

/// Weak-factor limits of the top eigenvalue and singular vectors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OnatskiLimits {
    /// Limit of the top eigenvalue of `XXᵀ/n`; `(1 + √c)²` below threshold.
    pub m1: f64,
    pub sigma_d: Option<f64>,
    pub mu_u: Option<f64>,
    pub mu_v: Option<f64>,
    pub sigma_u: Option<f64>,
    pub sigma_v: Option<f64>,
    pub above_threshold: bool,
}

pub fn onatski_limits(c: f64, d1: f64) -> Result<OnatskiLimits> {
    if !(c > 0.0 && c.is_finite()) || !(d1 > 0.0 && d1.is_finite()) {
        return Err(Error::Domain(format!("need c > 0 and d1 > 0, got c={} d1={}", c, d1)));
    }
    if d1 <= c.sqrt() {
        return Ok(OnatskiLimits {
            m1: (1.0 + c.sqrt()).powi(2),
            sigma_d: None,
            mu_u: None,
            mu_v: None,
            sigma_u: None,
            sigma_v: None,
            above_threshold: false,
        });
    }
    let d = d1;
    let g = d * d - c;
    let m1 = (d + 1.0) * (d + c) / d;
    let sigma_d = 2.0 * g / (d * d) * (2.0 * d + c + 1.0);
    let mu_u = (g / (d * (d + 1.0))).sqrt();
    let mu_v = (g / (d * (d + c))).sqrt();
    let q = (d + 1.0).powi(2) - (1.0 - c);
    let sigma_u = (c * c + d.powi(4)) * (d + 1.0) / (2.0 * d * g * g) + d * (c - 1.0) / (2.0 * g * (d + 1.0))
        - q * q * d / (2.0 * g * (d + 1.0).powi(3));
    let ratio = (d + 1.0) / (d + c);
    let sigma_v = c * d * (d + 1.0).powi(2) / (2.0 * (d + c) * g * g) * (1.0 + c * ratio * ratio)
        - q * q * c * c / (2.0 * d * g * (d + c).powi(3));
    Ok(OnatskiLimits {
        m1,
        sigma_d: Some(sigma_d),
        mu_u: Some(mu_u),
        mu_v: Some(mu_v),
        sigma_u: Some(sigma_u),
        sigma_v: Some(sigma_v),
        above_threshold: true,
    })
}

/// Expected excess `E BCV(k) - mn` in units of `√(mn)` for a true rank and
/// a fitted rank, each 0 or 1. The rank-one-truth cells are conservative
/// bounds and need `delta > 1`.
pub fn table1_cell(params: &TheoryParams, true_k: usize, fitted_k: usize) -> Result<f64> {
    params.validate()?;
    if true_k > 1 || fitted_k > 1 {
        return Err(Error::InvalidArgument(format!("ranks must be 0 or 1, got true {} fitted {}", true_k, fitted_k)));
    }
    if true_k == 1 && params.delta <= 1.0 {
        return Err(Error::Domain(format!("rank-one cells need delta > 1, got {}", params.delta)));
    }
    let TheoryParams { c, delta, theta, eta } = *params;
    Ok(match (true_k, fitted_k) {
        (0, 0) => 0.0,
        (1, 0) => delta,
        (0, 1) => 1.0 / (1.0 - theta) / (c.sqrt() + 1.0 / c.sqrt() + 2.0),
        _ => delta * (1.0 - 1.0 / eta).powi(2) + c.powf(1.5) + c.powf(-1.5) + 1.0 / delta,
    })
}

/// Every closed-form quantity available for one problem size.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TheoryReport {
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub s: usize,
    /// Tracy–Widom constants use `max(m, n) x min(m, n)`.
    pub tw_mu: f64,
    pub tw_sigma: f64,
    pub e0: f64,
    pub e1: f64,
    pub c: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub onatski: Option<OnatskiLimits>,
    /// `[[true0/fit0, true1/fit0], [true0/fit1, true1/fit1]]`, units of `√(mn)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table1: Option<[[f64; 2]; 2]>,
}

/// Assembles a [`TheoryReport`]. Weak-factor limits need `delta`; the
/// table needs `delta > 1`, `eta` and `r/m = s/n`.
pub fn theory_report(m: usize, n: usize, r: usize, s: usize, delta: Option<f64>, eta: Option<f64>) -> Result<TheoryReport> {
    let (tw_mu, tw_sigma) = tw_center_scale(m.max(n), m.min(n))?;
    let (e0, e1) = pure_noise_expectations(m, n, r, s)?;
    let c = m as f64 / n as f64;
    let d1 = delta.map(|d| d * c.sqrt());
    let onatski = d1.map(|d| onatski_limits(c, d)).transpose()?;
    let table1 = match (delta, eta) {
        (Some(delta), Some(eta)) => {
            let p = TheoryParams::from_dims(m, n, r, s, delta, eta)?;
            Some([
                [table1_cell(&p, 0, 0)?, table1_cell(&p, 1, 0)?],
                [table1_cell(&p, 0, 1)?, table1_cell(&p, 1, 1)?],
            ])
        }
        _ => None,
    };
    Ok(TheoryReport { m, n, r, s, tw_mu, tw_sigma, e0, e1, c, delta, d1, onatski, table1 })
}
