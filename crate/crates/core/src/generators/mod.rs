//! Simulation methods sharing a `fit(panel)` / `simulate(n_assets, length,
//! seed)` contract: the two trend-based generators, the diffusion
//! baselines (GBM, CEV) and the asymmetric GARCH baselines (EGARCH, GJR).

use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::rng::SimRng;
use crate::trends::{self, Direction, TrendSegmentation};
use crate::{Error, Panel, Result};

pub mod ecdf;
pub mod garch;
pub mod method1;
pub mod method2;
pub mod optim;
pub mod pca;
pub mod sde;

pub use ecdf::{ecdf_build, ecdf_inverse, EmpiricalCdf};
pub use garch::{garch_fit, GarchFit, GarchKind, GarchModel, GarchParams};
pub use method1::{m1_fit, m1_simulate, Method1Model};
pub use method2::{m2_fit, m2_simulate, Method2Model};
pub use pca::{pca_enlarge, PcaBasis};
pub use sde::{sde_fit, SdeKind, SdeModel, SdeParams};

pub const DEFAULT_WINDOW: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct TrendConfig {
    pub min_move: f64,
    pub min_length: usize,
}

impl Default for TrendConfig {
    fn default() -> Self {
        TrendConfig {
            min_move: trends::DEFAULT_MIN_MOVE,
            min_length: trends::DEFAULT_MIN_LENGTH,
        }
    }
}

impl TrendConfig {
    pub fn segment(&self, panel: &Panel) -> Result<TrendSegmentation> {
        let index = trends::equal_weight_index(panel)?;
        trends::segment_trends(&index, self.min_move, self.min_length)
    }
}

/// A generator before fitting.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(
    feature = "serde",
    serde(tag = "method", rename_all = "lowercase", deny_unknown_fields)
)]
pub enum GeneratorSpec {
    M1 {
        #[cfg_attr(feature = "serde", serde(default = "default_window"))]
        window: usize,
        #[cfg_attr(feature = "serde", serde(default))]
        trend: TrendConfig,
    },
    M2 {
        #[cfg_attr(feature = "serde", serde(default))]
        trend: TrendConfig,
    },
    Gbm,
    Cev,
    Egarch,
    Gjr,
}

#[cfg(feature = "serde")]
fn default_window() -> usize {
    DEFAULT_WINDOW
}

impl GeneratorSpec {
    pub const NAMES: [&'static str; 6] = ["m1", "m2", "gbm", "cev", "egarch", "gjr"];

    /// Default configuration for a method name.
    pub fn parse(name: &str) -> Option<Self> {
        Some(match name.trim().to_ascii_lowercase().as_str() {
            "m1" => GeneratorSpec::M1 {
                window: DEFAULT_WINDOW,
                trend: TrendConfig::default(),
            },
            "m2" => GeneratorSpec::M2 {
                trend: TrendConfig::default(),
            },
            "gbm" => GeneratorSpec::Gbm,
            "cev" => GeneratorSpec::Cev,
            "egarch" => GeneratorSpec::Egarch,
            "gjr" => GeneratorSpec::Gjr,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            GeneratorSpec::M1 { .. } => "m1",
            GeneratorSpec::M2 { .. } => "m2",
            GeneratorSpec::Gbm => "gbm",
            GeneratorSpec::Cev => "cev",
            GeneratorSpec::Egarch => "egarch",
            GeneratorSpec::Gjr => "gjr",
        }
    }

    pub fn fit(&self, panel: &Panel) -> Result<GeneratorModel> {
        Ok(match self {
            GeneratorSpec::M1 { window, trend } => {
                let seg = trend.segment(panel)?;
                GeneratorModel::M1(m1_fit(panel, &seg, *window)?)
            }
            GeneratorSpec::M2 { trend } => {
                let seg = trend.segment(panel)?;
                GeneratorModel::M2(m2_fit(panel, &seg)?)
            }
            GeneratorSpec::Gbm => GeneratorModel::Sde(sde_fit(panel, SdeKind::Gbm)?),
            GeneratorSpec::Cev => GeneratorModel::Sde(sde_fit(panel, SdeKind::Cev)?),
            GeneratorSpec::Egarch => GeneratorModel::Garch(garch::garch_fit_panel(panel, GarchKind::Egarch)?),
            GeneratorSpec::Gjr => GeneratorModel::Garch(garch::garch_fit_panel(panel, GarchKind::Gjr)?),
        })
    }
}

/// Fitted state of any generator.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "model", rename_all = "lowercase"))]
pub enum GeneratorModel {
    M1(Method1Model),
    M2(Method2Model),
    Sde(SdeModel),
    Garch(GarchModel),
    /// Returns a fixed panel unchanged; used to score externally simulated
    /// data and for null experiments with real data in both classes.
    Replay {
        name: String,
        panel: Panel,
    },
}

impl GeneratorModel {
    pub fn replay(name: impl Into<String>, panel: Panel) -> Self {
        GeneratorModel::Replay {
            name: name.into(),
            panel,
        }
    }

    pub fn name(&self) -> &str {
        match self {
            GeneratorModel::M1(_) => "m1",
            GeneratorModel::M2(_) => "m2",
            GeneratorModel::Sde(m) => m.kind.name(),
            GeneratorModel::Garch(m) => m.kind.name(),
            GeneratorModel::Replay { name, .. } => name,
        }
    }

    /// Replay ignores the requested shape and returns its panel.
    pub fn simulate(&self, n_assets: usize, length: usize, seed: u64) -> Result<Panel> {
        if !matches!(self, GeneratorModel::Replay { .. }) && (n_assets == 0 || length == 0) {
            return Err(Error::param("n_assets/length", "must be positive"));
        }
        match self {
            GeneratorModel::M1(m) => m1_simulate(m, n_assets, length, seed),
            GeneratorModel::M2(m) => m2_simulate(m, n_assets, length, seed),
            GeneratorModel::Sde(m) => m.simulate(n_assets, length, seed).map(|(p, _)| p),
            GeneratorModel::Garch(m) => m.simulate(n_assets, length, seed),
            GeneratorModel::Replay { panel, .. } => Ok(panel.clone()),
        }
    }
}

/// Draws an alternating sequence of trend indices from `directions` until
/// the summed `lengths` cover `length`. The first direction is a coin flip.
pub(crate) fn alternating_trends(
    directions: &[Direction],
    lengths: &[usize],
    length: usize,
    rng: &mut SimRng,
) -> Result<Vec<usize>> {
    let ups: Vec<usize> = (0..directions.len())
        .filter(|&i| directions[i] == Direction::Up && lengths[i] > 0)
        .collect();
    let downs: Vec<usize> = (0..directions.len())
        .filter(|&i| directions[i] == Direction::Down && lengths[i] > 0)
        .collect();
    if ups.is_empty() {
        return Err(Error::AlternationImpossible { missing: Direction::Up });
    }
    if downs.is_empty() {
        return Err(Error::AlternationImpossible {
            missing: Direction::Down,
        });
    }
    let mut dir = if rng.random::<bool>() {
        Direction::Up
    } else {
        Direction::Down
    };
    let mut covered = 0;
    let mut seq = Vec::new();
    while covered < length {
        let pool = if dir == Direction::Up { &ups } else { &downs };
        let k = pool[rng.random_range(0..pool.len())];
        seq.push(k);
        covered += lengths[k];
        dir = dir.opposite();
    }
    Ok(seq)
}

/// Standard normal vector.
pub(crate) fn normals(rng: &mut SimRng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
        .collect()
}
