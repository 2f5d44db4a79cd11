//! Trend-based generator that treats each asset's path through a trend as
//! one multivariate sample whose dimensions are the time steps.
//!
//! Simulated paths are drawn from the Gaussian fitted across assets, then
//! mapped onto the trend's empirical return distribution: ranks become
//! mid-rank uniforms, which pass through the inverse empirical CDF.

use alloc::vec;
use alloc::vec::Vec;

use crate::generators::ecdf::EmpiricalCdf;
use crate::generators::{alternating_trends, normals};
use crate::linalg::{affine_draw, helmert_factor, mean_vector, psd_factor, sample_covariance};
use crate::rng::{derive_seed, rng_from_seed};
use crate::trends::{Direction, TrendSegmentation};
use crate::{Error, Matrix, Panel, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Method2Trend {
    pub direction: Direction,
    pub length: usize,
    /// Per-step mean over assets.
    pub mean: Vec<f64>,
    /// `length` x k with `A Aᵀ` equal to the cross-asset sample covariance.
    pub factor: Matrix,
    /// Pooled over all assets within the trend.
    pub cdf: EmpiricalCdf,
}

impl Method2Trend {
    pub fn covariance(&self) -> Matrix {
        self.factor.gram()
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Method2Model {
    pub n_assets: usize,
    pub trends: Vec<Method2Trend>,
}

pub fn m2_fit(panel: &Panel, seg: &TrendSegmentation) -> Result<Method2Model> {
    let n = panel.n_assets();
    if n < 2 {
        return Err(Error::input("method 2 needs at least two assets"));
    }
    if seg.intervals.last().map_or(0, |i| i.end) > panel.n_steps() {
        return Err(Error::input("segmentation extends past the panel"));
    }
    let mut trends = Vec::with_capacity(seg.intervals.len());
    for iv in &seg.intervals {
        let len = iv.len();
        if len == 0 {
            continue;
        }
        let paths: Vec<&[f64]> = panel.rows().map(|r| &r[iv.start..iv.end]).collect();
        let factor = if n - 1 <= len {
            helmert_factor(&paths)
        } else {
            psd_factor(&sample_covariance(&paths), 1e-12)?
        };
        let pooled: Vec<f64> = paths.iter().flat_map(|p| p.iter().copied()).collect();
        trends.push(Method2Trend {
            direction: iv.direction,
            length: len,
            mean: mean_vector(&paths),
            factor,
            cdf: EmpiricalCdf::build(&pooled)?,
        });
    }
    if trends.is_empty() {
        return Err(Error::EmptyModel("segmentation has no trends".into()));
    }
    Ok(Method2Model { n_assets: n, trends })
}

/// Maps `x` in place to `F⁻¹((rank + 0.5) / n)`.
pub(crate) fn equalize_through(x: &mut [f64], cdf: &EmpiricalCdf) -> Result<()> {
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
    for (rank, &i) in order.iter().enumerate() {
        x[i] = cdf.inverse((rank as f64 + 0.5) / n as f64)?;
    }
    Ok(())
}

pub fn m2_simulate(model: &Method2Model, n_assets: usize, length: usize, seed: u64) -> Result<Panel> {
    if model.trends.is_empty() {
        return Err(Error::EmptyModel("method 2 model has no trends".into()));
    }
    let directions: Vec<Direction> = model.trends.iter().map(|t| t.direction).collect();
    let lengths: Vec<usize> = model.trends.iter().map(|t| t.length).collect();
    let seq = alternating_trends(
        &directions,
        &lengths,
        length,
        &mut rng_from_seed(derive_seed(seed, "m2-trends")),
    )?;
    let mut rng = rng_from_seed(derive_seed(seed, "m2-draws"));
    let mut rows = vec![Vec::with_capacity(length); n_assets];
    let mut filled = 0;
    for k in seq {
        let trend = &model.trends[k];
        let take = trend.length.min(length - filled);
        let mut x = vec![0.0; trend.length];
        for row in rows.iter_mut() {
            let z = normals(&mut rng, trend.factor.n_cols());
            affine_draw(&trend.mean, &trend.factor, &z, &mut x);
            equalize_through(&mut x, &trend.cdf)?;
            row.extend_from_slice(&x[..take]);
        }
        filled += take;
    }
    Panel::synthetic("M2_", rows)
}
