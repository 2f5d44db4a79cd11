//! Gradient-boosted regression trees under logistic loss.
//!
//! Each round fits a depth-limited tree to the residuals `y - p` with
//! Newton leaf values `Σ(y - p) / Σp(1 - p)`. If a full step would raise the
//! training loss the step is halved until it does not. Rounds stop early
//! once the loss on a held-out stratified share has not improved for
//! `patience` rounds; the model is cut back to its best round.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent float methods need std on older toolchains
use num_traits::Float;
use rand::seq::SliceRandom;

use crate::learn::tree::{check_training, check_two_classes, grow, DecisionTree, Presorted, TreeConfig};
use crate::rng::{derive_seed, rng_from_seed};
use crate::{Error, Matrix, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct GBoostConfig {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_leaf: f64,
    /// Share of rows held out for early stopping; 0 disables it.
    pub validation_fraction: f64,
    pub patience: usize,
}

impl Default for GBoostConfig {
    fn default() -> Self {
        GBoostConfig {
            n_rounds: 200,
            learning_rate: 0.1,
            max_depth: 3,
            min_leaf: 1.0,
            validation_fraction: 0.2,
            patience: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GradientBoostModel {
    pub config: GBoostConfig,
    pub seed: u64,
    pub n_features: usize,
    pub initial_log_odds: f64,
    /// Trees with their effective step (learning rate after halving).
    pub stages: Vec<(DecisionTree, f64)>,
    /// Training log-loss before the first round and after each kept round.
    pub train_loss: Vec<f64>,
    pub validation_loss: Vec<f64>,
}

fn sigmoid(f: f64) -> f64 {
    if f >= 0.0 {
        1.0 / (1.0 + (-f).exp())
    } else {
        let e = f.exp();
        e / (1.0 + e)
    }
}

/// Mean logistic loss of raw scores `f`.
fn log_loss(f: &[f64], y: &[u8]) -> f64 {
    // -[y ln p + (1-y) ln(1-p)] = ln(1 + e^f) - y f
    let softplus = |v: f64| {
        if v > 0.0 {
            v + (-v).exp().ln_1p()
        } else {
            v.exp().ln_1p()
        }
    };
    f.iter().zip(y).map(|(&v, &c)| softplus(v) - c as f64 * v).sum::<f64>() / f.len() as f64
}

/// Stratified hold-out; `None` when either side would miss a class.
fn split_validation(y: &[u8], fraction: f64, seed: u64) -> Option<(Vec<usize>, Vec<usize>)> {
    if fraction <= 0.0 {
        return None;
    }
    let mut rng = rng_from_seed(seed);
    let (mut train, mut valid) = (Vec::new(), Vec::new());
    for class in 0..2u8 {
        let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        idx.shuffle(&mut rng);
        let k = (idx.len() as f64 * fraction).round() as usize;
        if k == 0 || k >= idx.len() {
            return None;
        }
        valid.extend_from_slice(&idx[..k]);
        train.extend_from_slice(&idx[k..]);
    }
    train.sort_unstable();
    valid.sort_unstable();
    Some((train, valid))
}

pub fn gboost_train(x: &Matrix, y: &[u8], cfg: &GBoostConfig, seed: u64) -> Result<GradientBoostModel> {
    check_training(x, y)?;
    check_two_classes(y)?;
    if !(cfg.learning_rate > 0.0) {
        return Err(Error::param("learning_rate", "must be positive"));
    }
    if !(0.0..1.0).contains(&cfg.validation_fraction) {
        return Err(Error::param("validation_fraction", "must lie in [0, 1)"));
    }
    let (train_x, train_y, valid) =
        match split_validation(y, cfg.validation_fraction, derive_seed(seed, "gboost-validation")) {
            Some((tr, va)) => {
                let vy: Vec<u8> = va.iter().map(|&i| y[i]).collect();
                (
                    x.select_rows(&tr),
                    tr.iter().map(|&i| y[i]).collect::<Vec<u8>>(),
                    Some((x.select_rows(&va), vy)),
                )
            }
            None => (x.clone(), y.to_vec(), None),
        };
    let n = train_y.len();
    let base = train_y.iter().map(|&c| c as f64).sum::<f64>() / n as f64;
    let f0 = (base / (1.0 - base)).ln();
    let sorted = Presorted::new(&train_x);
    let tree_cfg = TreeConfig {
        max_depth: Some(cfg.max_depth),
        min_leaf: cfg.min_leaf,
    };
    let mut f = vec![f0; n];
    let mut fv = valid.as_ref().map(|(vx, _)| vec![f0; vx.n_rows()]);
    let mut stages = Vec::new();
    let mut train_loss = vec![log_loss(&f, &train_y)];
    let mut validation_loss = Vec::new();
    if let (Some(fv), Some((_, vy))) = (&fv, &valid) {
        validation_loss.push(log_loss(fv, vy));
    }
    let (mut best_round, mut best_valid) = (0, validation_loss.first().copied().unwrap_or(f64::INFINITY));
    let ones = vec![1.0; n];
    for round in 0..cfg.n_rounds {
        let p: Vec<f64> = f.iter().map(|&v| sigmoid(v)).collect();
        let g: Vec<f64> = train_y.iter().zip(&p).map(|(&c, &q)| c as f64 - q).collect();
        let h: Vec<f64> = p.iter().map(|&q| (q * (1.0 - q)).max(1e-12)).collect();
        let tree = grow(&train_x, &sorted, &g, &ones, &h, &tree_cfg);
        let deltas: Vec<f64> = train_x.rows().map(|r| tree.predict(r)).collect();
        let current = *train_loss.last().expect("initial loss");
        let mut step = cfg.learning_rate;
        let mut accepted = None;
        for _ in 0..30 {
            let trial: Vec<f64> = f.iter().zip(&deltas).map(|(a, d)| a + step * d).collect();
            let loss = log_loss(&trial, &train_y);
            if loss <= current {
                accepted = Some((trial, loss));
                break;
            }
            step *= 0.5;
        }
        let Some((trial, loss)) = accepted else {
            log::debug!("boosting stopped at round {round}: no step lowers the training loss");
            break;
        };
        f = trial;
        train_loss.push(loss);
        if let (Some(fv), Some((vx, vy))) = (&mut fv, &valid) {
            for (v, r) in fv.iter_mut().zip(vx.rows()) {
                *v += step * tree.predict(r);
            }
            let vl = log_loss(fv, vy);
            validation_loss.push(vl);
            if vl < best_valid {
                best_valid = vl;
                best_round = round + 1;
            }
        }
        stages.push((tree, step));
        if valid.is_some() && round + 1 - best_round >= cfg.patience {
            break;
        }
    }
    if valid.is_some() {
        stages.truncate(best_round);
        train_loss.truncate(best_round + 1);
        validation_loss.truncate(best_round + 1);
    }
    Ok(GradientBoostModel {
        config: *cfg,
        seed,
        n_features: x.n_cols(),
        initial_log_odds: f0,
        stages,
        train_loss,
        validation_loss,
    })
}

impl GradientBoostModel {
    pub fn score(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.n_cols() != self.n_features {
            return Err(Error::input("feature count differs from the trained model"));
        }
        Ok(x.rows()
            .map(|r| sigmoid(self.initial_log_odds + self.stages.iter().map(|(t, s)| s * t.predict(r)).sum::<f64>()))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::roc_auc;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    fn xor(n: usize, seed: u64) -> (Matrix, Vec<u8>) {
        let mut rng = rng_from_seed(seed);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let (a, b) = ((i % 2) as f64, ((i / 2) % 2) as f64);
            rows.push([
                a * 4.0 - 2.0 + rng.random::<f64>() - 0.5,
                b * 4.0 - 2.0 + rng.random::<f64>() - 0.5,
            ]);
            y.push(u8::from(a != b));
        }
        (Matrix::from_rows(&rows).unwrap(), y)
    }

    #[test]
    fn zero_rounds_give_base_rate() {
        let (x, _) = xor(40, 1);
        let y: Vec<u8> = (0..40).map(|i| u8::from(i % 4 == 0)).collect();
        let cfg = GBoostConfig {
            n_rounds: 0,
            validation_fraction: 0.0,
            ..GBoostConfig::default()
        };
        let m = gboost_train(&x, &y, &cfg, 0).unwrap();
        assert!(m.score(&x).unwrap().iter().all(|&s| (s - 0.25).abs() < 1e-12));
    }

    #[test]
    fn solves_xor() {
        let (x, y) = xor(400, 2);
        let m = gboost_train(&x, &y, &GBoostConfig::default(), 3).unwrap();
        let (xt, yt) = xor(400, 4);
        assert!(roc_auc(&m.score(&xt).unwrap(), &yt).unwrap().auc >= 0.95);
        assert!(m.train_loss.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn rejects_single_class() {
        let (x, _) = xor(20, 5);
        assert_eq!(
            gboost_train(&x, &[0; 20], &GBoostConfig::default(), 0),
            Err(Error::SingleClass)
        );
    }

    #[test]
    fn loss_matches_direct_formula() {
        let f = [0.3, -1.2, 2.5];
        let y = [1u8, 0, 0];
        let direct: f64 = f
            .iter()
            .zip(&y)
            .map(|(&v, &c)| {
                let p = 1.0 / (1.0 + (-v).exp());
                -(c as f64 * p.ln() + (1.0 - c as f64) * (1.0 - p).ln())
            })
            .sum::<f64>()
            / 3.0;
        assert!((log_loss(&f, &y) - direct).abs() < 1e-12);
    }
}
