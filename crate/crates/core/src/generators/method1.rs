//! Trend-based generator with windowed multivariate Gaussians.
//!
//! Within each trend of the market index a non-overlapping window of `W`
//! steps yields a mean vector and covariance of the cross-asset returns.
//! Synthesis strings together random alternating trends and draws each step
//! from its window's Gaussian.

use alloc::vec::Vec;

use rand::seq::index::sample;

use crate::generators::pca::{pca_enlarge, PcaBasis};
use crate::generators::{alternating_trends, normals};
use crate::linalg::{affine_draw, helmert_factor, mean_vector};
use crate::rng::{derive_seed, rng_from_seed};
use crate::trends::{Direction, TrendSegmentation};
use crate::{Error, Matrix, Panel, Result};

/// Moments of one window. The covariance is stored as a factor `A`
/// (assets x (W-1)) with `A Aᵀ` equal to the sample covariance.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WindowMoments {
    pub mean: Vec<f64>,
    pub factor: Matrix,
}

impl WindowMoments {
    pub fn covariance(&self) -> Matrix {
        self.factor.gram()
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Method1Trend {
    pub direction: Direction,
    pub windows: Vec<WindowMoments>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Method1Model {
    pub n_assets: usize,
    pub window: usize,
    pub trends: Vec<Method1Trend>,
}

pub fn m1_fit(panel: &Panel, seg: &TrendSegmentation, window: usize) -> Result<Method1Model> {
    if window < 2 {
        return Err(Error::param("window", "must be at least 2"));
    }
    if panel.n_assets() < 2 {
        return Err(Error::input("method 1 needs at least two assets"));
    }
    if seg.intervals.last().map_or(0, |i| i.end) > panel.n_steps() {
        return Err(Error::input("segmentation extends past the panel"));
    }
    let mut trends = Vec::new();
    for iv in &seg.intervals {
        let n_windows = iv.len() / window;
        if n_windows == 0 {
            log::warn!("trend [{}, {}) shorter than window {window}, skipped", iv.start, iv.end);
            continue;
        }
        let windows = (0..n_windows)
            .map(|w| {
                let start = iv.start + w * window;
                let obs: Vec<Vec<f64>> = (start..start + window).map(|t| panel.step(t)).collect();
                WindowMoments {
                    mean: mean_vector(&obs),
                    factor: helmert_factor(&obs),
                }
            })
            .collect();
        trends.push(Method1Trend {
            direction: iv.direction,
            windows,
        });
    }
    if trends.is_empty() {
        return Err(Error::EmptyModel("every trend is shorter than the window".into()));
    }
    Ok(Method1Model {
        n_assets: panel.n_assets(),
        window,
        trends,
    })
}

impl Method1Model {
    /// Simulates at the fitted dimension: assets x `length`.
    fn simulate_fitted(&self, length: usize, seed: u64) -> Result<Matrix> {
        let directions: Vec<Direction> = self.trends.iter().map(|t| t.direction).collect();
        let lengths: Vec<usize> = self.trends.iter().map(|t| t.windows.len() * self.window).collect();
        let mut rng = rng_from_seed(derive_seed(seed, "m1-trends"));
        let seq = alternating_trends(&directions, &lengths, length, &mut rng)?;
        let mut rng = rng_from_seed(derive_seed(seed, "m1-draws"));
        let mut out = Matrix::zeros(self.n_assets, length);
        let mut x = alloc::vec![0.0; self.n_assets];
        let mut t = 0;
        'fill: for k in seq {
            for w in &self.trends[k].windows {
                for _ in 0..self.window {
                    if t == length {
                        break 'fill;
                    }
                    let z = normals(&mut rng, w.factor.n_cols());
                    affine_draw(&w.mean, &w.factor, &z, &mut x);
                    for (a, v) in x.iter().enumerate() {
                        out.set(a, t, v.max(-0.999_999));
                    }
                    t += 1;
                }
            }
        }
        Ok(out)
    }
}

pub fn m1_simulate(model: &Method1Model, n_assets: usize, length: usize, seed: u64) -> Result<Panel> {
    if model.trends.is_empty() {
        return Err(Error::EmptyModel("method 1 model has no trends".into()));
    }
    let base = model.simulate_fitted(length, seed)?;
    let rows = if n_assets == model.n_assets {
        base
    } else if n_assets < model.n_assets {
        let mut rng = rng_from_seed(derive_seed(seed, "m1-subset"));
        let mut keep = sample(&mut rng, model.n_assets, n_assets).into_vec();
        keep.sort_unstable();
        base.select_rows(&keep)
    } else {
        log::info!("PCA enlargement: {} fitted assets -> {n_assets}", model.n_assets);
        let basis = PcaBasis::fit(&base)?;
        let w = pca_enlarge(&basis, n_assets, derive_seed(seed, "m1-pca"))?;
        let mut m = basis.project(&w)?;
        for i in 0..m.n_rows() {
            m.row_mut(i).iter_mut().for_each(|v| *v = v.max(-0.999_999));
        }
        m
    };
    Panel::synthetic("M1_", rows.rows().map(<[f64]>::to_vec).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sample_covariance;
    use crate::trends::TrendInterval;
    use crate::ReturnSeries;
    use alloc::vec;
    use rand::Rng;

    fn seg(intervals: Vec<TrendInterval>, n: usize) -> TrendSegmentation {
        TrendSegmentation {
            intervals,
            index: ReturnSeries::new("i", vec![0.0; n]).unwrap(),
        }
    }

    fn iv(start: usize, end: usize, direction: Direction) -> TrendInterval {
        TrendInterval { start, end, direction }
    }

    fn random_panel(n_assets: usize, n_steps: usize, seed: u64) -> Panel {
        let mut rng = rng_from_seed(seed);
        let rows = (0..n_assets)
            .map(|_| (0..n_steps).map(|_| 0.02 * (rng.random::<f64>() - 0.5)).collect())
            .collect();
        Panel::synthetic("R", rows).unwrap()
    }

    #[test]
    fn window_count_is_floor() {
        let p = random_panel(3, 130, 1);
        let s = seg(vec![iv(0, 100, Direction::Up), iv(100, 130, Direction::Down)], 130);
        let m = m1_fit(&p, &s, 20).unwrap();
        assert_eq!(m.trends[0].windows.len(), 5);
        assert_eq!(m.trends[1].windows.len(), 1);
    }

    #[test]
    fn short_trends_skipped_or_rejected() {
        let p = random_panel(3, 30, 1);
        let s = seg(vec![iv(0, 10, Direction::Up), iv(10, 30, Direction::Down)], 30);
        let m = m1_fit(&p, &s, 20).unwrap();
        assert_eq!(m.trends.len(), 1);
        let s = seg(vec![iv(0, 10, Direction::Up), iv(10, 19, Direction::Down)], 19);
        assert!(matches!(m1_fit(&p, &s, 20), Err(Error::EmptyModel(_))));
    }

    #[test]
    fn identical_assets_give_rank_one_covariance() {
        let row: Vec<f64> = (0..40).map(|t| ((t * 13) % 7) as f64 * 1e-3).collect();
        let p = Panel::synthetic("I", vec![row.clone(), row.clone(), row]).unwrap();
        let s = seg(vec![iv(0, 40, Direction::Up)], 40);
        let m = m1_fit(&p, &s, 20).unwrap();
        for w in &m.trends[0].windows {
            let (vals, _) = crate::linalg::symmetric_eigen(&w.covariance()).unwrap();
            assert!(vals[1].abs() <= 1e-12 * vals[0].abs().max(1e-300));
        }
    }

    #[test]
    fn moments_match_direct_summation() {
        let p = random_panel(3, 8, 5);
        let s = seg(vec![iv(0, 8, Direction::Down)], 8);
        let m = m1_fit(&p, &s, 4).unwrap();
        for (w, moments) in m.trends[0].windows.iter().enumerate() {
            let mut mean = [0.0; 3];
            let mut cov = [[0.0; 3]; 3];
            for t in 4 * w..4 * w + 4 {
                for a in 0..3 {
                    mean[a] += p.row(a)[t] / 4.0;
                }
            }
            for t in 4 * w..4 * w + 4 {
                for a in 0..3 {
                    for b in 0..3 {
                        cov[a][b] += (p.row(a)[t] - mean[a]) * (p.row(b)[t] - mean[b]) / 3.0;
                    }
                }
            }
            let c = moments.covariance();
            for a in 0..3 {
                assert!((moments.mean[a] - mean[a]).abs() < 1e-12);
                for b in 0..3 {
                    assert!((c.get(a, b) - cov[a][b]).abs() < 1e-12);
                }
            }
        }
    }

    fn two_trend_model(factor_scale: f64) -> Method1Model {
        let mk = |dir, mean: f64| Method1Trend {
            direction: dir,
            windows: vec![WindowMoments {
                mean: vec![mean, -mean],
                factor: Matrix::from_rows(&[[factor_scale, 0.0], [0.5 * factor_scale, factor_scale]]).unwrap(),
            }],
        };
        Method1Model {
            n_assets: 2,
            window: 5,
            trends: vec![mk(Direction::Up, 0.01), mk(Direction::Down, -0.02)],
        }
    }

    #[test]
    fn zero_covariance_returns_window_means() {
        let m = two_trend_model(0.0);
        let p = m1_simulate(&m, 2, 23, 1).unwrap();
        for t in 0..23 {
            let v = p.row(0)[t];
            assert!(v == 0.01 || v == -0.02);
            assert_eq!(p.row(1)[t], -v);
        }
    }

    #[test]
    fn simulation_alternates_and_is_deterministic() {
        let m = two_trend_model(0.0);
        let p = m1_simulate(&m, 2, 40, 9).unwrap();
        assert_eq!(p, m1_simulate(&m, 2, 40, 9).unwrap());
        let blocks: Vec<f64> = (0..8).map(|b| p.row(0)[b * 5]).collect();
        assert!(blocks.windows(2).all(|w| w[0] != w[1]));
    }

    #[test]
    fn monte_carlo_moments_converge() {
        let m = two_trend_model(0.01);
        let n = 10_000;
        let p = m1_simulate(&m, 2, n, 3).unwrap();
        // keep only steps generated by the up trend (mean +0.01 on asset 0)
        let mut obs = Vec::new();
        for b in 0..n / 5 {
            let rows: Vec<[f64; 2]> = (b * 5..b * 5 + 5).map(|t| [p.row(0)[t], p.row(1)[t]]).collect();
            let block_mean = rows.iter().map(|r| r[0]).sum::<f64>() / 5.0;
            if block_mean > -0.005 {
                obs.extend(rows);
            }
        }
        let k = obs.len() as f64;
        let mean = crate::linalg::mean_vector(&obs);
        let cov = sample_covariance(&obs);
        let target = two_trend_model(0.01).trends[0].windows[0].covariance();
        for a in 0..2 {
            let se = (target.get(a, a) / k).sqrt();
            let expected = if a == 0 { 0.01 } else { -0.01 };
            assert!((mean[a] - expected).abs() < 3.0 * se, "mean {a}: {}", mean[a]);
            for b in 0..2 {
                let var_se = ((target.get(a, a) * target.get(b, b) + target.get(a, b).powi(2)) / k).sqrt();
                assert!((cov.get(a, b) - target.get(a, b)).abs() < 3.0 * var_se);
            }
        }
    }

    #[test]
    fn subset_and_enlargement() {
        let p = random_panel(4, 400, 2);
        let s = seg(vec![iv(0, 200, Direction::Up), iv(200, 400, Direction::Down)], 400);
        let m = m1_fit(&p, &s, 20).unwrap();
        assert_eq!(m1_simulate(&m, 2, 100, 1).unwrap().n_assets(), 2);
        let big = m1_simulate(&m, 9, 100, 1).unwrap();
        assert_eq!((big.n_assets(), big.n_steps()), (9, 100));
    }

    #[test]
    fn one_sided_model_cannot_alternate() {
        let mut m = two_trend_model(0.0);
        m.trends.pop();
        assert_eq!(
            m1_simulate(&m, 2, 10, 0),
            Err(Error::AlternationImpossible {
                missing: Direction::Down
            })
        );
    }
}
