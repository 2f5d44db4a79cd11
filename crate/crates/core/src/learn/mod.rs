//! Classifiers emitting a score in `[0, 1]` per feature row (higher means
//! more likely simulated), and the detector presets that pair them with a
//! feature family.

use alloc::vec::Vec;

use crate::features::FeatureFamily;
use crate::{Error, Matrix, Result};

mod bagging;
mod gboost;
mod knn;
mod tree;

pub use bagging::{bag_train, permutation_importance, BagConfig, BaggedTreesModel, ImportanceReport};
pub use gboost::{gboost_train, GBoostConfig, GradientBoostModel};
pub use knn::{knn_train, KnnConfig, KnnEnsembleModel};
pub use tree::{tree_train, DecisionTree, Node, TreeConfig};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(
    feature = "serde",
    serde(tag = "classifier", rename_all = "snake_case", deny_unknown_fields)
)]
pub enum ClassifierSpec {
    Knn(KnnConfig),
    Tree(TreeConfig),
    Bagged(BagConfig),
    #[cfg_attr(feature = "serde", serde(rename = "gboost"))]
    GBoost(GBoostConfig),
    /// Scores every row with the same value.
    Constant {
        score: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "classifier", rename_all = "snake_case"))]
pub enum ClassifierModel {
    Knn(KnnEnsembleModel),
    Tree(DecisionTree),
    Bagged(BaggedTreesModel),
    #[cfg_attr(feature = "serde", serde(rename = "gboost"))]
    GBoost(GradientBoostModel),
    Constant {
        score: f64,
        n_features: usize,
    },
}

impl ClassifierSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ClassifierSpec::Knn(_) => "knn",
            ClassifierSpec::Tree(_) => "tree",
            ClassifierSpec::Bagged(_) => "bagged",
            ClassifierSpec::GBoost(_) => "gboost",
            ClassifierSpec::Constant { .. } => "constant",
        }
    }

    pub fn train(&self, x: &Matrix, y: &[u8], seed: u64) -> Result<ClassifierModel> {
        Ok(match self {
            ClassifierSpec::Knn(c) => ClassifierModel::Knn(knn_train(x, y, c, seed)?),
            ClassifierSpec::Tree(c) => ClassifierModel::Tree(tree_train(x, y, c)?),
            ClassifierSpec::Bagged(c) => ClassifierModel::Bagged(bag_train(x, y, c, seed)?),
            ClassifierSpec::GBoost(c) => ClassifierModel::GBoost(gboost_train(x, y, c, seed)?),
            ClassifierSpec::Constant { score } => {
                if !(0.0..=1.0).contains(score) {
                    return Err(Error::param("score", "must lie in [0, 1]"));
                }
                tree::check_training(x, y)?;
                ClassifierModel::Constant {
                    score: *score,
                    n_features: x.n_cols(),
                }
            }
        })
    }
}

impl ClassifierModel {
    pub fn name(&self) -> &'static str {
        match self {
            ClassifierModel::Knn(_) => "knn",
            ClassifierModel::Tree(_) => "tree",
            ClassifierModel::Bagged(_) => "bagged",
            ClassifierModel::GBoost(_) => "gboost",
            ClassifierModel::Constant { .. } => "constant",
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            ClassifierModel::Knn(m) => m.n_features(),
            ClassifierModel::Tree(t) => t.n_features,
            ClassifierModel::Bagged(m) => m.n_features(),
            ClassifierModel::GBoost(m) => m.n_features,
            ClassifierModel::Constant { n_features, .. } => *n_features,
        }
    }

    pub fn score(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.n_cols() != self.n_features() {
            return Err(Error::input(alloc::format!(
                "model expects {} features, got {}",
                self.n_features(),
                x.n_cols()
            )));
        }
        match self {
            ClassifierModel::Knn(m) => m.score(x),
            ClassifierModel::Tree(t) => Ok(x.rows().map(|r| t.predict(r)).collect()),
            ClassifierModel::Bagged(m) => m.score(x),
            ClassifierModel::GBoost(m) => m.score(x),
            ClassifierModel::Constant { score, .. } => Ok(alloc::vec![*score; x.n_rows()]),
        }
    }
}

/// A feature family paired with a classifier.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct DetectorSpec {
    pub name: alloc::string::String,
    pub family: FeatureFamily,
    pub classifier: ClassifierSpec,
}

impl DetectorSpec {
    /// Preset names accepted by [`DetectorSpec::preset`].
    pub const PRESETS: [&'static str; 5] = ["reference1", "reference2", "reference3", "system2", "system7"];

    pub fn new(name: &str, family: FeatureFamily, classifier: ClassifierSpec) -> Self {
        DetectorSpec {
            name: name.into(),
            family,
            classifier,
        }
    }

    /// `reference1`: return ACF + 1-NN ensemble; `reference2`: absolute
    /// return ACF + 1-NN ensemble; `reference3`: statistics + bagged trees;
    /// `system2`: sorted features + boosting; `system7`: reoccurrence
    /// features + boosting.
    pub fn preset(name: &str) -> Option<Self> {
        let key = name.trim().to_ascii_lowercase();
        let (family, classifier) = match key.as_str() {
            "reference1" => (FeatureFamily::AcfReturns, ClassifierSpec::Knn(KnnConfig::default())),
            "reference2" => (FeatureFamily::AcfAbsolute, ClassifierSpec::Knn(KnnConfig::default())),
            "reference3" => (FeatureFamily::Statistics, ClassifierSpec::Bagged(BagConfig::default())),
            "system2" => (FeatureFamily::Sorted, ClassifierSpec::GBoost(GBoostConfig::default())),
            "system7" => (
                FeatureFamily::Reoccurrence,
                ClassifierSpec::GBoost(GBoostConfig::default()),
            ),
            _ => return None,
        };
        Some(DetectorSpec::new(&key, family, classifier))
    }
}
