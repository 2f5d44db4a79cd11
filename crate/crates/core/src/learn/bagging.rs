//! Bootstrap-aggregated classification trees with out-of-bag bookkeeping.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::learn::tree::{check_training, grow, DecisionTree, Presorted, TreeConfig};
use crate::rng::{derive_indexed, rng_from_seed};
use crate::{Error, Matrix, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct BagConfig {
    pub n_trees: usize,
    pub tree: TreeConfig,
}

impl Default for BagConfig {
    fn default() -> Self {
        BagConfig {
            n_trees: 100,
            tree: TreeConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BaggedTreesModel {
    pub config: BagConfig,
    pub seed: u64,
    pub n_train: usize,
    pub trees: Vec<DecisionTree>,
    /// Training rows left out of each tree's bootstrap sample.
    pub out_of_bag: Vec<Vec<u32>>,
}

pub fn bag_train(x: &Matrix, y: &[u8], cfg: &BagConfig, seed: u64) -> Result<BaggedTreesModel> {
    check_training(x, y)?;
    if cfg.n_trees == 0 {
        return Err(Error::param("n_trees", "must be at least 1"));
    }
    let n = x.n_rows();
    let sorted = Presorted::new(x);
    let mut trees = Vec::with_capacity(cfg.n_trees);
    let mut out_of_bag = Vec::with_capacity(cfg.n_trees);
    for t in 0..cfg.n_trees {
        let mut rng = rng_from_seed(derive_indexed(seed, "bag-tree", t as u64));
        let mut w = vec![0.0; n];
        for _ in 0..n {
            w[rng.random_range(0..n)] += 1.0;
        }
        let g: Vec<f64> = (0..n).map(|i| w[i] * y[i] as f64).collect();
        trees.push(grow(x, &sorted, &g, &w, &w, &cfg.tree));
        out_of_bag.push((0..n as u32).filter(|&i| w[i as usize] == 0.0).collect());
    }
    Ok(BaggedTreesModel {
        config: *cfg,
        seed,
        n_train: n,
        trees,
        out_of_bag,
    })
}

impl BaggedTreesModel {
    pub fn n_features(&self) -> usize {
        self.trees[0].n_features
    }

    /// Mean of the trees' class-1 frequencies.
    pub fn score(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.n_cols() != self.n_features() {
            return Err(Error::input("feature count differs from the trained model"));
        }
        let k = self.trees.len() as f64;
        Ok(x.rows()
            .map(|r| self.trees.iter().map(|t| t.predict(r)).sum::<f64>() / k)
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ImportanceReport {
    /// Mean increase in out-of-bag misclassification rate per feature.
    pub importances: Vec<f64>,
    pub trees_used: usize,
}

impl ImportanceReport {
    /// Feature indices from most to least important.
    pub fn ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.importances.len()).collect();
        idx.sort_by(|&a, &b| self.importances[b].total_cmp(&self.importances[a]).then(a.cmp(&b)));
        idx
    }
}

fn oob_error(tree: &DecisionTree, x: &Matrix, y: &[u8], rows: &[u32], column: Option<(usize, &[f64])>) -> f64 {
    let mut buf = vec![0.0; x.n_cols()];
    let mut wrong = 0usize;
    for (k, &i) in rows.iter().enumerate() {
        buf.copy_from_slice(x.row(i as usize));
        if let Some((f, values)) = column {
            buf[f] = values[k];
        }
        let predicted = u8::from(tree.predict(&buf) > 0.5);
        wrong += usize::from(predicted != y[i as usize]);
    }
    wrong as f64 / rows.len() as f64
}

/// `x`, `y` must be the training data. Trees without out-of-bag rows are
/// skipped.
pub fn permutation_importance(model: &BaggedTreesModel, x: &Matrix, y: &[u8], seed: u64) -> Result<ImportanceReport> {
    check_training(x, y)?;
    if x.n_rows() != model.n_train || x.n_cols() != model.n_features() {
        return Err(Error::input(
            "importance needs the training matrix the model was fitted on",
        ));
    }
    let d = x.n_cols();
    let mut total = vec![0.0; d];
    let mut used = 0;
    for (t, (tree, rows)) in model.trees.iter().zip(&model.out_of_bag).enumerate() {
        if rows.is_empty() {
            log::warn!("tree {t} has no out-of-bag rows, skipped");
            continue;
        }
        used += 1;
        let base = oob_error(tree, x, y, rows, None);
        for (f, acc) in total.iter_mut().enumerate() {
            let mut values: Vec<f64> = rows.iter().map(|&i| x.get(i as usize, f)).collect();
            values.shuffle(&mut rng_from_seed(derive_indexed(seed, "permute", (t * d + f) as u64)));
            *acc += oob_error(tree, x, y, rows, Some((f, &values))) - base;
        }
    }
    if used == 0 {
        return Err(Error::InsufficientData("no tree has out-of-bag rows".into()));
    }
    Ok(ImportanceReport {
        importances: total.into_iter().map(|v| v / used as f64).collect(),
        trees_used: used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::tree::tree_train;

    fn data(n: usize, seed: u64) -> (Matrix, Vec<u8>) {
        let mut rng = rng_from_seed(seed);
        let y: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let rows: Vec<Vec<f64>> = y
            .iter()
            .map(|&c| {
                let mut r: Vec<f64> = (0..10).map(|_| rng.random::<f64>()).collect();
                r[0] = c as f64;
                r[9] = 1.0;
                r
            })
            .collect();
        (Matrix::from_rows(&rows).unwrap(), y)
    }

    #[test]
    fn label_feature_dominates_importance() {
        let (x, y) = data(300, 1);
        let m = bag_train(
            &x,
            &y,
            &BagConfig {
                n_trees: 30,
                ..BagConfig::default()
            },
            2,
        )
        .unwrap();
        let rep = permutation_importance(&m, &x, &y, 3).unwrap();
        assert_eq!(rep.ranking()[0], 0);
        assert!(rep.importances[9].abs() <= 0.01);
    }

    #[test]
    fn single_tree_bag_reproduces_in_bag_rows() {
        let (x, y) = data(80, 4);
        let m = bag_train(
            &x,
            &y,
            &BagConfig {
                n_trees: 1,
                ..BagConfig::default()
            },
            5,
        )
        .unwrap();
        let oob: alloc::collections::BTreeSet<u32> = m.out_of_bag[0].iter().copied().collect();
        let s = m.score(&x).unwrap();
        for i in 0..80 {
            if !oob.contains(&(i as u32)) {
                assert_eq!(s[i], y[i] as f64);
            }
        }
        // a plain tree on the full data fits every row
        let t = tree_train(&x, &y, &TreeConfig::default()).unwrap();
        assert!(x.rows().zip(&y).all(|(r, &c)| t.predict(r) == c as f64));
    }

    #[test]
    fn deterministic_given_seed() {
        let (x, y) = data(100, 6);
        let cfg = BagConfig {
            n_trees: 10,
            ..BagConfig::default()
        };
        assert_eq!(bag_train(&x, &y, &cfg, 7).unwrap(), bag_train(&x, &y, &cfg, 7).unwrap());
        assert_ne!(bag_train(&x, &y, &cfg, 7).unwrap(), bag_train(&x, &y, &cfg, 8).unwrap());
    }
}
