//! Asymmetric GARCH(1,1) baselines with standardized Student-t innovations.
//!
//! GJR: `σ²_t = ω + (α + γ·1[ε_{t-1} < 0]) ε²_{t-1} + β σ²_{t-1}`.
//! EGARCH: `ln σ²_t = ω + β ln σ²_{t-1} + α (|z_{t-1}| - E|z|) + γ z_{t-1}`.
//!
//! Fitting maximizes the exact Student-t likelihood with a multi-start
//! Nelder–Mead simplex over an unconstrained parameterization. Returns are
//! rescaled to unit variance first and the estimates mapped back.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)] // inherent float methods need std on older toolchains
use num_traits::Float;
use rand::Rng;
use rand_distr::StudentT;

use crate::generators::optim::{nelder_mead, NelderMeadConfig};
use crate::linalg::inverse;
use crate::rng::{derive_indexed, derive_seed, rng_from_seed};
use crate::stats::{mean, std_dev};
use crate::{Error, Matrix, Panel, Result, ReturnSeries};

pub const MIN_FIT_LENGTH: usize = 500;
pub const BURN_IN: usize = 500;
const MIN_RETURN: f64 = -0.999_999;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum GarchKind {
    Egarch,
    Gjr,
}

impl GarchKind {
    pub fn name(self) -> &'static str {
        match self {
            GarchKind::Egarch => "egarch",
            GarchKind::Gjr => "gjr",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GarchParams {
    pub kind: GarchKind,
    pub mu: f64,
    pub omega: f64,
    pub alpha: f64,
    pub beta: f64,
    /// GJR `γ` or EGARCH sign coefficient.
    pub leverage: f64,
    /// Student-t degrees of freedom.
    pub nu: f64,
}

impl GarchParams {
    pub const NAMES: [&'static str; 6] = ["mu", "omega", "alpha", "beta", "leverage", "nu"];

    pub fn as_array(&self) -> [f64; 6] {
        [self.mu, self.omega, self.alpha, self.beta, self.leverage, self.nu]
    }

    pub fn from_array(kind: GarchKind, v: [f64; 6]) -> Self {
        GarchParams {
            kind,
            mu: v[0],
            omega: v[1],
            alpha: v[2],
            beta: v[3],
            leverage: v[4],
            nu: v[5],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.as_array().iter().any(|v| !v.is_finite()) {
            return Err(Error::param("garch", "non-finite parameter"));
        }
        if !(self.nu > 2.0) {
            return Err(Error::param("nu", "must exceed 2"));
        }
        match self.kind {
            GarchKind::Gjr => {
                if !(self.omega > 0.0) || self.alpha < 0.0 || self.beta < 0.0 || self.leverage < 0.0 {
                    return Err(Error::param(
                        "gjr",
                        "omega must be positive, other coefficients non-negative",
                    ));
                }
                if self.persistence() >= 1.0 {
                    return Err(Error::param("gjr", "alpha + beta + leverage/2 must be below 1"));
                }
            }
            GarchKind::Egarch => {
                if !(self.beta.abs() < 1.0) {
                    return Err(Error::param("egarch", "|beta| must be below 1"));
                }
            }
        }
        Ok(())
    }

    /// `α + β + γ/2` for GJR, `β` for EGARCH.
    pub fn persistence(&self) -> f64 {
        match self.kind {
            GarchKind::Gjr => self.alpha + self.beta + 0.5 * self.leverage,
            GarchKind::Egarch => self.beta,
        }
    }

    /// Long-run variance of the innovations.
    pub fn unconditional_variance(&self) -> f64 {
        match self.kind {
            GarchKind::Gjr => self.omega / (1.0 - self.persistence()),
            GarchKind::Egarch => (self.omega / (1.0 - self.beta)).exp(),
        }
    }

    /// `mean_abs` is `E|z|`, hoisted out of the recursion.
    fn next_variance(&self, var: f64, eps: f64, mean_abs: f64) -> f64 {
        match self.kind {
            GarchKind::Gjr => {
                let a = if eps < 0.0 {
                    self.alpha + self.leverage
                } else {
                    self.alpha
                };
                self.omega + a * eps * eps + self.beta * var
            }
            GarchKind::Egarch => {
                let z = eps / var.sqrt();
                let ln = self.omega + self.beta * var.ln() + self.alpha * (z.abs() - mean_abs) + self.leverage * z;
                ln.clamp(-700.0, 700.0).exp()
            }
        }
    }

    /// Same model on returns multiplied by `s`.
    fn rescaled(&self, s: f64) -> Self {
        let mut p = *self;
        p.mu *= s;
        match self.kind {
            GarchKind::Gjr => p.omega *= s * s,
            GarchKind::Egarch => p.omega += (1.0 - self.beta) * (s * s).ln(),
        }
        p
    }
}

/// `E|z|` for a unit-variance Student-t variable.
pub fn mean_abs_t(nu: f64) -> f64 {
    let lg = libm::lgamma((nu + 1.0) / 2.0) - libm::lgamma(nu / 2.0);
    2.0 * (nu - 2.0).sqrt() * lg.exp() / (PI.sqrt() * (nu - 1.0))
}

/// Conditional variances `σ²_t` for `returns`, started at their sample
/// variance.
pub fn conditional_variances(p: &GarchParams, returns: &[f64]) -> Vec<f64> {
    let mean_abs = mean_abs_t(p.nu);
    let mut var = crate::stats::variance(returns).max(1e-300);
    let mut out = Vec::with_capacity(returns.len());
    for (t, _) in returns.iter().enumerate() {
        if t > 0 {
            var = p.next_variance(var, returns[t - 1] - p.mu, mean_abs);
        }
        out.push(var);
    }
    out
}

/// Exact Student-t log-likelihood; `-inf` outside the admissible region.
pub fn loglik(p: &GarchParams, returns: &[f64]) -> f64 {
    if p.validate().is_err() {
        return f64::NEG_INFINITY;
    }
    let nu = p.nu;
    let c = libm::lgamma((nu + 1.0) / 2.0) - libm::lgamma(nu / 2.0) - 0.5 * (PI * (nu - 2.0)).ln();
    let mean_abs = mean_abs_t(nu);
    let mut ll = 0.0;
    let mut var = crate::stats::variance(returns).max(1e-300);
    for (t, &r) in returns.iter().enumerate() {
        if t > 0 {
            var = p.next_variance(var, returns[t - 1] - p.mu, mean_abs);
        }
        if !(var > 0.0) || !var.is_finite() {
            return f64::NEG_INFINITY;
        }
        let e = r - p.mu;
        ll += c - 0.5 * var.ln() - 0.5 * (nu + 1.0) * (e * e / ((nu - 2.0) * var)).ln_1p();
    }
    if ll.is_finite() {
        ll
    } else {
        f64::NEG_INFINITY
    }
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Unconstrained coordinates for unit-variance data.
fn decode(kind: GarchKind, x: &[f64]) -> GarchParams {
    let nu = 2.0 + x[5].clamp(-10.0, 10.0).exp();
    match kind {
        GarchKind::Gjr => {
            let p = logistic(x[2]);
            let m = x[3].max(x[4]).max(0.0);
            let w = [(x[3] - m).exp(), (x[4] - m).exp(), (-m).exp()];
            let s = w[0] + w[1] + w[2];
            GarchParams {
                kind,
                mu: x[0],
                omega: x[1].exp(),
                alpha: p * w[0] / s,
                beta: p * w[1] / s,
                leverage: 2.0 * p * w[2] / s,
                nu,
            }
        }
        GarchKind::Egarch => GarchParams {
            kind,
            mu: x[0],
            omega: x[1],
            alpha: x[3],
            beta: x[2].tanh(),
            leverage: x[4],
            nu,
        },
    }
}

fn encode(p: &GarchParams) -> Vec<f64> {
    let nu = (p.nu - 2.0).max(1e-4).ln();
    match p.kind {
        GarchKind::Gjr => {
            let total = p.persistence().clamp(1e-6, 1.0 - 1e-6);
            let g = (0.5 * p.leverage).max(1e-8);
            vec![
                p.mu,
                p.omega.ln(),
                (total / (1.0 - total)).ln(),
                (p.alpha.max(1e-8) / g).ln(),
                (p.beta.max(1e-8) / g).ln(),
                nu,
            ]
        }
        GarchKind::Egarch => vec![
            p.mu,
            p.omega,
            p.beta.clamp(-0.999_999, 0.999_999).atanh(),
            p.alpha,
            p.leverage,
            nu,
        ],
    }
}

fn starts(kind: GarchKind, mu: f64) -> [GarchParams; 3] {
    let mk = |alpha, beta, leverage, nu| {
        let mut p = GarchParams {
            kind,
            mu,
            omega: 0.0,
            alpha,
            beta,
            leverage,
            nu,
        };
        p.omega = match kind {
            GarchKind::Gjr => 1.0 - p.persistence(),
            GarchKind::Egarch => 0.0,
        };
        p
    };
    match kind {
        GarchKind::Gjr => [
            mk(0.05, 0.90, 0.04, 8.0),
            mk(0.10, 0.80, 0.10, 5.0),
            mk(0.03, 0.95, 0.02, 15.0),
        ],
        GarchKind::Egarch => [
            mk(0.10, 0.95, -0.05, 8.0),
            mk(0.20, 0.85, -0.10, 5.0),
            mk(0.05, 0.98, 0.0, 15.0),
        ],
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GarchFit {
    pub params: GarchParams,
    pub loglik: f64,
    /// Log-likelihood at the first starting point.
    pub initial_loglik: f64,
    /// Asymptotic standard errors in the order of [`GarchParams::NAMES`];
    /// NaN where the observed information is not invertible.
    pub std_errors: [f64; 6],
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GarchFitOptions {
    pub max_iterations: usize,
}

impl Default for GarchFitOptions {
    fn default() -> Self {
        GarchFitOptions { max_iterations: 4000 }
    }
}

pub fn garch_fit(series: &ReturnSeries, kind: GarchKind) -> Result<GarchFit> {
    garch_fit_with(&series.returns, kind, GarchFitOptions::default())
}

pub fn garch_fit_with(returns: &[f64], kind: GarchKind, opts: GarchFitOptions) -> Result<GarchFit> {
    if returns.len() < MIN_FIT_LENGTH {
        return Err(Error::InsufficientData(alloc::format!(
            "{} returns, need {MIN_FIT_LENGTH}",
            returns.len()
        )));
    }
    if returns.iter().any(|r| !r.is_finite()) {
        return Err(Error::input("non-finite return"));
    }
    let sd = std_dev(returns);
    if !(sd > 0.0) {
        return Err(Error::ZeroVariance);
    }
    let scaled: Vec<f64> = returns.iter().map(|r| r / sd).collect();
    let objective = |x: &[f64]| -loglik(&decode(kind, x), &scaled);
    let cfg = NelderMeadConfig {
        max_iterations: opts.max_iterations,
        ..NelderMeadConfig::default()
    };
    let start_points = starts(kind, mean(&scaled));
    let initial_loglik = loglik(&start_points[0].rescaled(sd), returns);
    let mut best: Option<(Vec<f64>, f64, bool)> = None;
    let mut iterations = 0;
    for s in &start_points {
        let first = nelder_mead(&objective, &encode(s), &cfg);
        // restart from the optimum to escape a collapsed simplex
        let second = nelder_mead(&objective, &first.x, &cfg);
        iterations += first.iterations + second.iterations;
        if best.as_ref().map_or(true, |b| second.value < b.1) {
            best = Some((second.x, second.value, second.converged));
        }
    }
    let (x, value, converged) = best.expect("three starts");
    let fitted = decode(kind, &x).rescaled(sd);
    let ll = loglik(&fitted, returns);
    if !converged || !value.is_finite() {
        return Err(Error::FitFailure {
            iterations,
            best_loglik: ll,
        });
    }
    log::debug!("{} fit: loglik {ll:.3} after {iterations} iterations", kind.name());
    Ok(GarchFit {
        params: fitted,
        loglik: ll,
        initial_loglik,
        std_errors: standard_errors(&fitted, returns, sd),
        iterations,
    })
}

/// Inverse observed information from a central-difference Hessian in the
/// natural parameters.
fn standard_errors(p: &GarchParams, returns: &[f64], sd: f64) -> [f64; 6] {
    let theta = p.as_array();
    let floors = [1e-2 * sd, 0.0, 1e-2, 1e-2, 1e-2, 1.0];
    let h: Vec<f64> = (0..6)
        .map(|i| 1e-4 * theta[i].abs().max(floors[i]).max(1e-12))
        .collect();
    let f = |v: [f64; 6]| loglik(&GarchParams::from_array(p.kind, v), returns);
    let shifted = |moves: &[(usize, f64)]| {
        let mut v = theta;
        for &(i, d) in moves {
            v[i] += d;
        }
        f(v)
    };
    let f0 = f(theta);
    let mut info = Matrix::zeros(6, 6);
    for i in 0..6 {
        let d2 = (shifted(&[(i, h[i])]) - 2.0 * f0 + shifted(&[(i, -h[i])])) / (h[i] * h[i]);
        info.set(i, i, -d2);
        for j in 0..i {
            let d = (shifted(&[(i, h[i]), (j, h[j])])
                - shifted(&[(i, h[i]), (j, -h[j])])
                - shifted(&[(i, -h[i]), (j, h[j])])
                + shifted(&[(i, -h[i]), (j, -h[j])]))
                / (4.0 * h[i] * h[j]);
            info.set(i, j, -d);
            info.set(j, i, -d);
        }
    }
    let mut se = [f64::NAN; 6];
    if info.as_slice().iter().all(|v| v.is_finite()) {
        if let Some(cov) = inverse(&info) {
            for (i, s) in se.iter_mut().enumerate() {
                let v = cov.get(i, i);
                if v > 0.0 {
                    *s = v.sqrt();
                }
            }
        }
    }
    se
}

/// Simulated returns after a burn-in started at the unconditional variance.
pub fn simulate_returns(p: &GarchParams, length: usize, seed: u64) -> Result<Vec<f64>> {
    p.validate()?;
    let t = StudentT::new(p.nu).map_err(|_| Error::param("nu", "invalid degrees of freedom"))?;
    let scale = ((p.nu - 2.0) / p.nu).sqrt();
    let mut rng = rng_from_seed(seed);
    let mut var = p.unconditional_variance();
    if !(var > 0.0) || !var.is_finite() {
        return Err(Error::Numerical("unconditional variance is not finite".into()));
    }
    let mean_abs = mean_abs_t(p.nu);
    let mut out = Vec::with_capacity(length);
    for step in 0..BURN_IN + length {
        let z = rng.sample::<f64, _>(t) * scale;
        let eps = var.sqrt() * z;
        if step >= BURN_IN {
            out.push((p.mu + eps).max(MIN_RETURN));
        }
        var = p.next_variance(var, eps, mean_abs);
        if !var.is_finite() {
            return Err(Error::Numerical("conditional variance overflow".into()));
        }
    }
    Ok(out)
}

/// Per-asset parameter sets; simulation picks one uniformly per output
/// asset.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GarchModel {
    pub kind: GarchKind,
    pub fits: Vec<GarchParams>,
}

/// Assets whose fit fails are skipped with a warning.
pub fn garch_fit_panel(panel: &Panel, kind: GarchKind) -> Result<GarchModel> {
    let mut fits = Vec::new();
    let mut last_err = None;
    for a in 0..panel.n_assets() {
        match garch_fit_with(panel.row(a), kind, GarchFitOptions::default()) {
            Ok(f) => fits.push(f.params),
            Err(e) => {
                log::warn!("{} fit skipped asset {}: {e}", kind.name(), panel.asset_ids()[a]);
                last_err = Some(e);
            }
        }
    }
    if fits.is_empty() {
        return Err(last_err.unwrap_or_else(|| Error::input("empty panel")));
    }
    Ok(GarchModel { kind, fits })
}

impl GarchModel {
    pub fn simulate(&self, n_assets: usize, length: usize, seed: u64) -> Result<Panel> {
        if self.fits.is_empty() {
            return Err(Error::EmptyModel("no fitted parameter sets".into()));
        }
        let mut pick = rng_from_seed(derive_seed(seed, "garch-pick"));
        let rows = (0..n_assets)
            .map(|a| {
                let p = &self.fits[pick.random_range(0..self.fits.len())];
                simulate_returns(p, length, derive_indexed(seed, "garch-path", a as u64))
            })
            .collect::<Result<Vec<_>>>()?;
        let prefix = match self.kind {
            GarchKind::Egarch => "EGARCH_",
            GarchKind::Gjr => "GJR_",
        };
        Panel::synthetic(prefix, rows)
    }
}
