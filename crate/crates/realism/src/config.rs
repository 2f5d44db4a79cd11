//! Declarative run files (TOML). Every key is optional; command-line flags
//! override file values. Unknown keys are rejected.
//!
//! ```toml
//! data_dir = "/data/markets"     # base for relative paths
//! seed = 7
//! threads = 4
//! real = "ingest/panel.csv"
//! generators = ["gbm", "gjr", { method = "m2", trend = { min_move = 0.05 } }]
//! detectors = ["reference2", { name = "acf-gb", family = "acf_absolute", classifier = { classifier = "gboost" } }]
//!
//! [challenge]
//! segments_per_class = 1000
//! noise = 1e-13
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use realism_core::eval::ChallengeConfig;
use realism_core::features::FeatureFamily;
use realism_core::generators::{GeneratorSpec, TrendConfig};
use realism_core::learn::{ClassifierSpec, DetectorSpec};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data_dir: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub roc: Option<bool>,

    pub prices: Option<PathBuf>,
    pub coverage: Option<f64>,
    pub panel: Option<PathBuf>,
    pub real: Option<PathBuf>,
    pub sim_panel: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub segments: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub scores: Option<PathBuf>,
    pub key: Option<PathBuf>,

    pub family: Option<FeatureFamily>,
    pub experiment: Option<u8>,
    pub assets: Option<usize>,
    pub length: Option<usize>,

    pub generator: Option<toml::Value>,
    pub generators: Option<Vec<toml::Value>>,
    pub detector: Option<toml::Value>,
    pub detectors: Option<Vec<toml::Value>>,
    pub classifier: Option<toml::Value>,

    pub trend: Option<TrendConfig>,
    pub challenge: Option<ChallengeSection>,
}

/// Challenge settings; the seed comes from the top-level `seed`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChallengeSection {
    pub segment_length: Option<usize>,
    pub segments_per_class: Option<usize>,
    pub train_fraction: Option<f64>,
    pub noise: Option<f64>,
    pub sim_assets: Option<usize>,
    pub sim_length: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = crate::io::read_string(path)?;
        Self::parse(&text).map_err(|e| e.at(path))
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::validation(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Range checks and eager parsing of generator and detector entries.
    pub fn validate(&self) -> CliResult<()> {
        if let Some(c) = self.coverage {
            if !(c > 0.0 && c <= 1.0) {
                return Err(CliError::validation("coverage must lie in (0, 1]"));
            }
        }
        if self.threads == Some(0) {
            return Err(CliError::validation("threads must be at least 1"));
        }
        if let Some(t) = &self.trend {
            if !(t.min_move > 0.0) {
                return Err(CliError::validation("trend.min_move must be positive"));
            }
        }
        if let Some(g) = &self.generator {
            generator_entry(g)?;
        }
        for g in self.generators.iter().flatten() {
            generator_entry(g)?;
        }
        if let Some(d) = &self.detector {
            detector_entry(d)?;
        }
        for d in self.detectors.iter().flatten() {
            detector_entry(d)?;
        }
        if let Some(c) = &self.classifier {
            classifier_entry(c)?;
        }
        self.challenge_config(None)?.validate()?;
        Ok(())
    }

    /// Defaults, then this file, then `flags`.
    pub fn challenge_config(&self, flags: Option<&ChallengeSection>) -> CliResult<ChallengeConfig> {
        let mut c = ChallengeConfig::default();
        if let Some(s) = self.seed {
            c.seed = s;
        }
        for section in [self.challenge.as_ref(), flags].into_iter().flatten() {
            if let Some(v) = section.segment_length {
                c.segment_length = v;
            }
            if let Some(v) = section.segments_per_class {
                c.segments_per_class = v;
            }
            if let Some(v) = section.train_fraction {
                c.train_fraction = v;
            }
            if section.noise.is_some() {
                c.noise = section.noise;
            }
            if section.sim_assets.is_some() {
                c.sim_assets = section.sim_assets;
            }
            if section.sim_length.is_some() {
                c.sim_length = section.sim_length;
            }
        }
        Ok(c)
    }
}

fn describe(v: &toml::Value) -> String {
    v.to_string()
}

/// A generator given by name (`"gjr"`) or as a table (`{ method = "m1", window = 30 }`).
pub fn generator_entry(v: &toml::Value) -> CliResult<GeneratorSpec> {
    match v {
        toml::Value::String(name) => parse_generator(name),
        toml::Value::Table(_) => v
            .clone()
            .try_into()
            .map_err(|e| CliError::validation(format!("generator {}: {e}", describe(v)))),
        _ => Err(CliError::validation(format!(
            "generator {} must be a name or a table",
            describe(v)
        ))),
    }
}

pub fn parse_generator(name: &str) -> CliResult<GeneratorSpec> {
    GeneratorSpec::parse(name).ok_or_else(|| {
        CliError::validation(format!(
            "unknown generator `{name}`; expected one of {}",
            GeneratorSpec::NAMES.join(", ")
        ))
    })
}

/// A detector given by preset name or as a full table.
pub fn detector_entry(v: &toml::Value) -> CliResult<DetectorSpec> {
    match v {
        toml::Value::String(name) => parse_detector(name),
        toml::Value::Table(_) => v
            .clone()
            .try_into()
            .map_err(|e| CliError::validation(format!("detector {}: {e}", describe(v)))),
        _ => Err(CliError::validation(format!(
            "detector {} must be a preset name or a table",
            describe(v)
        ))),
    }
}

pub fn parse_detector(name: &str) -> CliResult<DetectorSpec> {
    DetectorSpec::preset(name).ok_or_else(|| {
        CliError::validation(format!(
            "unknown detector `{name}`; expected one of {}",
            DetectorSpec::PRESETS.join(", ")
        ))
    })
}

pub fn classifier_entry(v: &toml::Value) -> CliResult<ClassifierSpec> {
    match v {
        toml::Value::String(name) => parse_classifier(name),
        toml::Value::Table(_) => v
            .clone()
            .try_into()
            .map_err(|e| CliError::validation(format!("classifier {}: {e}", describe(v)))),
        _ => Err(CliError::validation(format!(
            "classifier {} must be a name or a table",
            describe(v)
        ))),
    }
}

/// Default-configured classifier by name.
pub fn parse_classifier(name: &str) -> CliResult<ClassifierSpec> {
    use realism_core::learn::{BagConfig, GBoostConfig, KnnConfig, TreeConfig};
    Ok(match name.trim().to_ascii_lowercase().as_str() {
        "knn" => ClassifierSpec::Knn(KnnConfig::default()),
        "tree" => ClassifierSpec::Tree(TreeConfig::default()),
        "bagged" => ClassifierSpec::Bagged(BagConfig::default()),
        "gboost" => ClassifierSpec::GBoost(GBoostConfig::default()),
        other => {
            return Err(CliError::validation(format!(
                "unknown classifier `{other}`; expected knn, tree, bagged or gboost"
            )))
        }
    })
}

pub fn parse_family(name: &str) -> CliResult<FeatureFamily> {
    FeatureFamily::parse(name).ok_or_else(|| {
        let names: Vec<&str> = FeatureFamily::ALL.iter().map(|f| f.name()).collect();
        CliError::validation(format!(
            "unknown feature family `{name}`; expected one of {}",
            names.join(", ")
        ))
    })
}
