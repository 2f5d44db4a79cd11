//! Ensemble of 1-nearest-neighbour classifiers under cosine similarity.

use alloc::vec::Vec;

use rand::seq::index::sample;

#[allow(unused_imports)] // inherent float methods need std on older toolchains
use num_traits::Float;

use crate::learn::tree::{check_training, check_two_classes};
use crate::rng::{derive_indexed, rng_from_seed};
use crate::{Error, Matrix, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct KnnConfig {
    pub members: usize,
    /// Share of the training rows each member keeps, drawn without
    /// replacement.
    pub subsample: f64,
}

impl Default for KnnConfig {
    fn default() -> Self {
        KnnConfig {
            members: 40,
            subsample: 0.632,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KnnEnsembleModel {
    pub config: KnnConfig,
    pub seed: u64,
    /// Unit-norm training rows shared by all members.
    pub rows: Matrix,
    pub labels: Vec<u8>,
    /// Ascending row indices held by each member.
    pub members: Vec<Vec<u32>>,
}

fn unit_rows(x: &Matrix) -> Result<Matrix> {
    let mut out = x.clone();
    for i in 0..out.n_rows() {
        let row = out.row_mut(i);
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(Error::ZeroNormRow { row: i });
        }
        row.iter_mut().for_each(|v| *v /= norm);
    }
    Ok(out)
}

pub fn knn_train(x: &Matrix, y: &[u8], cfg: &KnnConfig, seed: u64) -> Result<KnnEnsembleModel> {
    check_training(x, y)?;
    check_two_classes(y)?;
    if cfg.members == 0 {
        return Err(Error::param("members", "must be at least 1"));
    }
    if !(cfg.subsample > 0.0 && cfg.subsample <= 1.0) {
        return Err(Error::param("subsample", "must lie in (0, 1]"));
    }
    let rows = unit_rows(x)?;
    let n = x.n_rows();
    let keep = ((n as f64 * cfg.subsample).round() as usize).clamp(1, n);
    let members = (0..cfg.members)
        .map(|m| {
            let mut rng = rng_from_seed(derive_indexed(seed, "knn-member", m as u64));
            let mut idx: Vec<u32> = sample(&mut rng, n, keep).into_iter().map(|i| i as u32).collect();
            idx.sort_unstable();
            idx
        })
        .collect();
    Ok(KnnEnsembleModel {
        config: *cfg,
        seed,
        rows,
        labels: y.to_vec(),
        members,
    })
}

impl KnnEnsembleModel {
    pub fn n_features(&self) -> usize {
        self.rows.n_cols()
    }

    /// Share of members whose nearest stored row has class 1. Ties in
    /// similarity go to the lowest row index.
    pub fn score(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.n_cols() != self.n_features() {
            return Err(Error::input("feature count differs from the trained model"));
        }
        let q = unit_rows(x)?;
        let mut sims = alloc::vec![0.0; self.rows.n_rows()];
        let mut out = Vec::with_capacity(q.n_rows());
        for row in q.rows() {
            for (s, r) in sims.iter_mut().zip(self.rows.rows()) {
                *s = r.iter().zip(row).map(|(a, b)| a * b).sum();
            }
            let votes = self
                .members
                .iter()
                .filter(|idx| {
                    let mut best = idx[0] as usize;
                    for &i in idx.iter() {
                        if sims[i as usize] > sims[best] {
                            best = i as usize;
                        }
                    }
                    self.labels[best] == 1
                })
                .count();
            out.push(votes as f64 / self.members.len() as f64);
        }
        Ok(out)
    }
}
