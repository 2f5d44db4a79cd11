//! The real-versus-simulated challenge, the real-versus-real control
//! experiments and the generator × detector comparison matrix.
//!
//! Real and simulated panels are each split by asset; training segments
//! come from one side and test segments from the other, so no test
//! segment shares an asset with a training segment of its class.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::dataset::{
    extract_segments, inject_noise, partition, split_assets, PartitionMode, PartitionSpec, SegmentQuery,
    DEFAULT_SEGMENT_LENGTH,
};
use crate::eval::roc::{roc_auc, RocResult};
use crate::features::FeatureMatrix;
use crate::generators::{GeneratorModel, GeneratorSpec};
use crate::learn::{ClassifierModel, DetectorSpec};
use crate::rng::{derive_seed, fnv1a_extend, rng_from_seed};
use crate::{Error, Label, Origin, Panel, Result, Segment};

pub const DEFAULT_SEGMENTS_PER_CLASS: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ChallengeConfig {
    pub segment_length: usize,
    /// Segments per class in each of the training and test sets.
    pub segments_per_class: usize,
    /// Share of assets used for training segments.
    pub train_fraction: f64,
    pub seed: u64,
    /// Amplitude of duplicate-breaking noise added to both classes.
    pub noise: Option<f64>,
    /// Simulated panel shape; the real panel's shape when unset.
    pub sim_assets: Option<usize>,
    pub sim_length: Option<usize>,
}

impl Default for ChallengeConfig {
    fn default() -> Self {
        ChallengeConfig {
            segment_length: DEFAULT_SEGMENT_LENGTH,
            segments_per_class: DEFAULT_SEGMENTS_PER_CLASS,
            train_fraction: 0.5,
            seed: 0,
            noise: None,
            sim_assets: None,
            sim_length: None,
        }
    }
}

impl ChallengeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.segment_length == 0 || self.segments_per_class == 0 {
            return Err(Error::param("segments", "length and count must be positive"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::param("train_fraction", "must lie in (0, 1)"));
        }
        if self.noise.is_some_and(|a| !(a > 0.0 && a.is_finite())) {
            return Err(Error::param("noise", "must be positive"));
        }
        Ok(())
    }

    fn seed(&self, purpose: &str) -> u64 {
        derive_seed(self.seed, purpose)
    }

    fn query(&self) -> SegmentQuery {
        SegmentQuery::new(self.segment_length, self.segments_per_class)
    }
}

/// Labelled training and test segments with their identifiers, shuffled.
#[derive(Debug, Clone, PartialEq)]
pub struct ChallengeBundle {
    pub train: Vec<(String, Segment)>,
    pub test: Vec<(String, Segment)>,
}

impl ChallengeBundle {
    /// Identifiers `tr000001..` and `te000001..` are assigned after a
    /// seeded shuffle, so ids carry no label information.
    pub fn assemble(mut train: Vec<Segment>, mut test: Vec<Segment>, seed: u64) -> Self {
        train.shuffle(&mut rng_from_seed(derive_seed(seed, "shuffle-train")));
        test.shuffle(&mut rng_from_seed(derive_seed(seed, "shuffle-test")));
        let name = |prefix: &str, v: Vec<Segment>| {
            v.into_iter()
                .enumerate()
                .map(|(i, s)| (format!("{prefix}{:06}", i + 1), s))
                .collect()
        };
        ChallengeBundle {
            train: name("tr", train),
            test: name("te", test),
        }
    }

    fn split(items: &[(String, Segment)]) -> (Vec<String>, Vec<Segment>) {
        items.iter().cloned().unzip()
    }
}

/// Real side of a challenge, shared by every generator and detector.
#[derive(Debug, Clone, PartialEq)]
pub struct RealSide {
    /// The real panel after optional noise; generators are fitted on it.
    pub panel: Panel,
    pub train: Vec<Segment>,
    pub test: Vec<Segment>,
}

impl RealSide {
    /// Order-sensitive hash of the test segments' origins and values.
    pub fn test_hash(&self) -> u64 {
        segments_hash(&self.test)
    }
}

pub fn segments_hash(segments: &[Segment]) -> u64 {
    let mut h = crate::rng::fnv1a(b"segments");
    for s in segments {
        h = fnv1a_extend(h, s.origin.asset_id.as_bytes());
        h = fnv1a_extend(h, &(s.origin.start as u64).to_le_bytes());
        for v in &s.values {
            h = fnv1a_extend(h, &v.to_bits().to_le_bytes());
        }
    }
    h
}

/// Draws train and test segments from an asset split of `panel`.
fn split_sides(panel: &Panel, label: Label, cfg: &ChallengeConfig, tag: &str) -> Result<(Vec<Segment>, Vec<Segment>)> {
    let (a, b) = split_assets(panel, cfg.train_fraction, cfg.seed(&format!("{tag}-split")))?;
    let draw = |p: &Panel, purpose: &str| -> Result<Vec<Segment>> {
        Ok(
            extract_segments(p, &cfg.query(), cfg.seed(&format!("{tag}-{purpose}")))?
                .into_iter()
                .map(|s| s.labelled(label))
                .collect(),
        )
    };
    Ok((draw(&a, "train")?, draw(&b, "test")?))
}

pub fn prepare_real(real: &Panel, cfg: &ChallengeConfig) -> Result<RealSide> {
    cfg.validate()?;
    let panel = match cfg.noise {
        Some(a) => inject_noise(real, a, cfg.seed("noise-real"))?,
        None => real.clone(),
    };
    let (train, test) = split_sides(&panel, Label::Real, cfg, "real")?;
    Ok(RealSide { panel, train, test })
}

/// Simulates a panel the size of the real one and draws its segments.
pub fn prepare_simulated(
    real: &RealSide,
    model: &GeneratorModel,
    cfg: &ChallengeConfig,
) -> Result<(Vec<Segment>, Vec<Segment>)> {
    let n_assets = cfg.sim_assets.unwrap_or(real.panel.n_assets());
    let length = cfg.sim_length.unwrap_or(real.panel.n_steps());
    let mut sim = model.simulate(n_assets, length, cfg.seed("simulate"))?;
    if let Some(a) = cfg.noise {
        sim = inject_noise(&sim, a, cfg.seed("noise-sim"))?;
    }
    split_sides(&sim, Label::Simulated, cfg, "sim")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub model: ClassifierModel,
    pub test_ids: Vec<String>,
    pub test_labels: Vec<u8>,
    pub scores: Vec<f64>,
    pub roc: RocResult,
}

/// Extracts the detector's features, trains on the training set and scores
/// the test set.
pub fn evaluate(bundle: &ChallengeBundle, detector: &DetectorSpec, seed: u64) -> Result<Evaluation> {
    let (train_ids, train) = ChallengeBundle::split(&bundle.train);
    let (test_ids, test) = ChallengeBundle::split(&bundle.test);
    let ftrain = FeatureMatrix::extract(detector.family, &train, train_ids)?;
    let ftest = FeatureMatrix::extract(detector.family, &test, test_ids.clone())?;
    let y = ftrain
        .labels
        .as_deref()
        .ok_or_else(|| Error::input("training segments need labels"))?;
    let test_labels = ftest
        .labels
        .clone()
        .ok_or_else(|| Error::input("test segments need labels"))?;
    let model = detector
        .classifier
        .train(&ftrain.values, y, derive_seed(seed, "detector"))?;
    let scores = model.score(&ftest.values)?;
    let roc = roc_auc(&scores, &test_labels)?;
    Ok(Evaluation {
        model,
        test_ids,
        test_labels,
        scores,
        roc,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChallengeResult {
    pub generator: String,
    pub detector: String,
    pub config: ChallengeConfig,
    pub auc: f64,
    pub evaluation: Evaluation,
    pub bundle: ChallengeBundle,
    /// Hash of the real test segments; equal across cells that share them.
    pub real_test_hash: u64,
}

impl ChallengeResult {
    pub fn train_origins(&self, label: Label) -> impl Iterator<Item = &Origin> {
        self.bundle
            .train
            .iter()
            .filter(move |(_, s)| s.label == Some(label))
            .map(|(_, s)| &s.origin)
    }

    pub fn test_origins(&self, label: Label) -> impl Iterator<Item = &Origin> {
        self.bundle
            .test
            .iter()
            .filter(move |(_, s)| s.label == Some(label))
            .map(|(_, s)| &s.origin)
    }
}

/// Runs one cell against an already prepared real side.
pub fn run_prepared(
    real: &RealSide,
    model: &GeneratorModel,
    detector: &DetectorSpec,
    cfg: &ChallengeConfig,
) -> Result<ChallengeResult> {
    let (sim_train, sim_test) = prepare_simulated(real, model, cfg)?;
    let train = real.train.iter().cloned().chain(sim_train).collect();
    let test = real.test.iter().cloned().chain(sim_test).collect();
    let bundle = ChallengeBundle::assemble(train, test, cfg.seed);
    let evaluation = evaluate(&bundle, detector, cfg.seed)?;
    log::info!("{} vs {}: AUC {:.4}", model.name(), detector.name, evaluation.roc.auc);
    Ok(ChallengeResult {
        generator: model.name().into(),
        detector: detector.name.clone(),
        config: cfg.clone(),
        auc: evaluation.roc.auc,
        evaluation,
        bundle,
        real_test_hash: real.test_hash(),
    })
}

/// Full protocol with an already fitted generator.
pub fn run_challenge_fitted(
    real: &Panel,
    model: &GeneratorModel,
    detector: &DetectorSpec,
    cfg: &ChallengeConfig,
) -> Result<ChallengeResult> {
    run_prepared(&prepare_real(real, cfg)?, model, detector, cfg)
}

/// Fits the generator on the whole (optionally noised) real panel, then
/// runs the protocol.
pub fn run_challenge(
    real: &Panel,
    generator: &GeneratorSpec,
    detector: &DetectorSpec,
    cfg: &ChallengeConfig,
) -> Result<ChallengeResult> {
    let side = prepare_real(real, cfg)?;
    let model = generator.fit(&side.panel)?;
    run_prepared(&side, &model, detector, cfg)
}

/// The four real-versus-real experiments: classes differ by period
/// (1, 2) or by asset group (3, 4); training and test segments come from
/// the same subsets (1, 3) or from a further split by assets (2) or by
/// period (4).
pub fn run_control_experiment(
    real: &Panel,
    experiment: u8,
    detector: &DetectorSpec,
    cfg: &ChallengeConfig,
) -> Result<ChallengeResult> {
    cfg.validate()?;
    let mode = match experiment {
        1 => PartitionMode::ByPeriod,
        2 => PartitionMode::ByPeriodThenAsset,
        3 => PartitionMode::ByAsset,
        4 => PartitionMode::ByAssetThenPeriod,
        _ => return Err(Error::param("experiment", "must be 1, 2, 3 or 4")),
    };
    let spec = PartitionSpec {
        mode,
        split_fraction: 0.5,
        seed: cfg.seed("partition"),
    };
    let panel = match cfg.noise {
        Some(a) => inject_noise(real, a, cfg.seed("noise-real"))?,
        None => real.clone(),
    };
    let (first, second) = partition(&panel, &spec)?;
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (subset, label) in [(&first, Label::Real), (&second, Label::Simulated)] {
        let (tr, te) = match &subset.halves {
            Some((a, b)) => (a, b),
            None => (&subset.panel, &subset.panel),
        };
        let draw = |p: &Panel, purpose: &str| -> Result<Vec<Segment>> {
            Ok(
                extract_segments(p, &cfg.query(), cfg.seed(&format!("{}-{purpose}", label.as_str())))?
                    .into_iter()
                    .map(|s| s.labelled(label))
                    .collect(),
            )
        };
        train.extend(draw(tr, "train")?);
        test.extend(draw(te, "test")?);
    }
    let real_test: Vec<Segment> = test.iter().filter(|s| s.label == Some(Label::Real)).cloned().collect();
    let bundle = ChallengeBundle::assemble(train, test, cfg.seed);
    let evaluation = evaluate(&bundle, detector, cfg.seed)?;
    Ok(ChallengeResult {
        generator: format!("experiment{experiment}"),
        detector: detector.name.clone(),
        config: cfg.clone(),
        auc: evaluation.roc.auc,
        evaluation,
        bundle,
        real_test_hash: segments_hash(&real_test),
    })
}

/// Generators × detectors; failures stay in their cells.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub generators: Vec<String>,
    pub detectors: Vec<String>,
    /// Row per generator, column per detector.
    pub cells: Vec<Vec<Result<ChallengeResult>>>,
}

impl CompareReport {
    pub fn auc(&self, generator: usize, detector: usize) -> Option<f64> {
        self.cells[generator][detector].as_ref().ok().map(|r| r.auc)
    }
}

pub fn compare_methods(
    real: &Panel,
    generators: &[GeneratorSpec],
    detectors: &[DetectorSpec],
    cfg: &ChallengeConfig,
) -> Result<CompareReport> {
    if generators.is_empty() || detectors.is_empty() {
        return Err(Error::input("comparison needs at least one generator and one detector"));
    }
    let side = prepare_real(real, cfg)?;
    let cells = generators
        .iter()
        .map(|g| match g.fit(&side.panel) {
            Ok(model) => detectors.iter().map(|d| run_prepared(&side, &model, d, cfg)).collect(),
            Err(e) => {
                log::warn!("fitting {} failed: {e}", g.name());
                detectors.iter().map(|_| Err(e.clone())).collect()
            }
        })
        .collect();
    Ok(CompareReport {
        generators: generators.iter().map(|g| g.name().into()).collect(),
        detectors: detectors.iter().map(|d| d.name.clone()).collect(),
        cells,
    })
}
