//! Diffusion baselines: geometric Brownian motion and constant elasticity
//! of variance, one period per step.

use alloc::vec::Vec;

#[allow(unused_imports)] // inherent float methods need std on older toolchains
use num_traits::Float;
use rand::Rng;

use crate::generators::normals;
use crate::rng::{derive_indexed, derive_seed, rng_from_seed};
use crate::stats::{linear_fit, mean, std_dev};
use crate::{Error, Panel, Result};

/// Minimum returns per asset for fitting.
pub const MIN_FIT_LENGTH: usize = 30;
/// Price floor relative to the unit starting price.
pub const PRICE_FLOOR: f64 = 1e-8;
/// `-E[ln |Z|]` for standard normal `Z`.
const NEG_MEAN_LOG_ABS_NORMAL: f64 = 0.635_181_422_730_739_1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum SdeKind {
    Gbm,
    Cev,
}

impl SdeKind {
    pub fn name(self) -> &'static str {
        match self {
            SdeKind::Gbm => "gbm",
            SdeKind::Cev => "cev",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SdeParams {
    pub mu: f64,
    pub sigma: f64,
    /// Fixed at 1 for GBM.
    pub gamma: f64,
}

impl SdeParams {
    pub fn gbm(mu: f64, sigma: f64) -> Self {
        SdeParams { mu, sigma, gamma: 1.0 }
    }

    fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0) || !self.mu.is_finite() || !self.sigma.is_finite() || !self.gamma.is_finite() {
            return Err(Error::param("sigma", "must be finite and non-negative"));
        }
        Ok(())
    }
}

/// One parameter set per fitted asset.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SdeModel {
    pub kind: SdeKind,
    pub fits: Vec<SdeParams>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SdeDiagnostics {
    /// Steps at which a CEV path was held at the price floor.
    pub floor_hits: usize,
}

pub fn fit_gbm(returns: &[f64]) -> Result<SdeParams> {
    if returns.len() < MIN_FIT_LENGTH {
        return Err(Error::InsufficientData(alloc::format!(
            "{} returns, need {MIN_FIT_LENGTH}",
            returns.len()
        )));
    }
    let logs: Vec<f64> = returns.iter().map(|r| (1.0 + r).ln()).collect();
    let sd = std_dev(&logs);
    let p = SdeParams::gbm(mean(&logs) + 0.5 * sd * sd, sd);
    p.validate()?;
    Ok(p)
}

/// Drift from the mean simple return; elasticity and scale from the
/// regression of `ln |ΔS|` on `ln S` along the unit-started price path.
pub fn fit_cev(returns: &[f64]) -> Result<SdeParams> {
    if returns.len() < MIN_FIT_LENGTH {
        return Err(Error::InsufficientData(alloc::format!(
            "{} returns, need {MIN_FIT_LENGTH}",
            returns.len()
        )));
    }
    let mut s = 1.0;
    let mut x = Vec::with_capacity(returns.len());
    let mut y = Vec::with_capacity(returns.len());
    for r in returns {
        let ds = s * r;
        if ds != 0.0 {
            x.push(s.ln());
            y.push(ds.abs().ln());
        }
        s += ds;
    }
    let (gamma, intercept) = match linear_fit(&x, &y) {
        Some(f) if f.0.is_finite() => f,
        // flat price level: no information on elasticity
        _ => (1.0, mean(&y)),
    };
    let p = SdeParams {
        mu: mean(returns),
        sigma: if y.is_empty() {
            0.0
        } else {
            (intercept + NEG_MEAN_LOG_ABS_NORMAL).exp()
        },
        gamma,
    };
    p.validate()?;
    Ok(p)
}

pub fn sde_fit(panel: &Panel, kind: SdeKind) -> Result<SdeModel> {
    let fits = panel
        .rows()
        .map(|r| match kind {
            SdeKind::Gbm => fit_gbm(r),
            SdeKind::Cev => fit_cev(r),
        })
        .collect::<Result<Vec<_>>>()?;
    if fits.is_empty() {
        return Err(Error::input("empty panel"));
    }
    Ok(SdeModel { kind, fits })
}

/// Exact GBM returns for given standard normal draws.
pub fn gbm_returns(p: &SdeParams, z: &[f64]) -> Vec<f64> {
    let drift = p.mu - 0.5 * p.sigma * p.sigma;
    z.iter().map(|z| (drift + p.sigma * z).exp() - 1.0).collect()
}

/// Euler–Maruyama returns from a unit start; the second value counts floor
/// hits.
pub fn cev_returns(p: &SdeParams, z: &[f64]) -> (Vec<f64>, usize) {
    let mut s = 1.0;
    let mut hits = 0;
    let out = z
        .iter()
        .map(|z| {
            let mut next = s + p.mu * s + p.sigma * s.powf(p.gamma) * z;
            if !(next > PRICE_FLOOR) {
                next = PRICE_FLOOR;
                hits += 1;
            }
            let r = next / s - 1.0;
            s = next;
            r
        })
        .collect();
    (out, hits)
}

impl SdeModel {
    pub fn simulate(&self, n_assets: usize, length: usize, seed: u64) -> Result<(Panel, SdeDiagnostics)> {
        if self.fits.is_empty() {
            return Err(Error::EmptyModel("no fitted parameter sets".into()));
        }
        for p in &self.fits {
            p.validate()?;
        }
        let mut pick = rng_from_seed(derive_seed(seed, "sde-pick"));
        let mut diag = SdeDiagnostics::default();
        let mut rows = Vec::with_capacity(n_assets);
        for a in 0..n_assets {
            let p = &self.fits[pick.random_range(0..self.fits.len())];
            let z = normals(&mut rng_from_seed(derive_indexed(seed, "sde-path", a as u64)), length);
            rows.push(match self.kind {
                SdeKind::Gbm => gbm_returns(p, &z),
                SdeKind::Cev => {
                    let (r, hits) = cev_returns(p, &z);
                    diag.floor_hits += hits;
                    r
                }
            });
        }
        if diag.floor_hits > 0 {
            log::warn!("CEV paths held at the price floor {} times", diag.floor_hits);
        }
        let prefix = match self.kind {
            SdeKind::Gbm => "GBM_",
            SdeKind::Cev => "CEV_",
        };
        Ok((Panel::synthetic(prefix, rows)?, diag))
    }
}
