//! Fully resolved jobs and their execution. Every job writes its files into
//! an output directory together with a manifest that can replay it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use realism_core::eval::{
    prepare_real, roc_auc, run_control_experiment, run_prepared, ChallengeConfig, ChallengeResult,
};
use realism_core::features::{FeatureFamily, FeatureMatrix};
use realism_core::generators::{GeneratorModel, GeneratorSpec, TrendConfig};
use realism_core::learn::DetectorSpec;
use realism_core::rng::derive_seed;
use realism_core::{Label, Panel, Segment};

use crate::archive::{self, TrainedDetector};
use crate::error::{CliError, CliResult};
use crate::ingest;
use crate::io;
use crate::manifest::{digest_outputs, now_rfc3339, FileDigest, Manifest, Versions, MANIFEST_VERSION};

/// Where a simulation's generator comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "from", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSource {
    /// Fit `generator` on a panel file.
    Fit { panel: PathBuf, generator: GeneratorSpec },
    /// Load a fitted generator archive.
    Archive { path: PathBuf },
}

/// Rows to train on or score: a feature matrix file or raw segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    Features { path: PathBuf },
    Segments { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case", deny_unknown_fields)]
pub enum Job {
    Ingest {
        prices: PathBuf,
        coverage: f64,
    },
    Simulate {
        source: ModelSource,
        assets: Option<usize>,
        length: Option<usize>,
        seed: u64,
    },
    Trends {
        panel: PathBuf,
        trend: TrendConfig,
    },
    Challenge {
        real: PathBuf,
        /// Generator to fit; `None` when `sim_panel` supplies the simulated class.
        generator: Option<GeneratorSpec>,
        sim_panel: Option<PathBuf>,
        detector: DetectorSpec,
        config: ChallengeConfig,
        roc: bool,
    },
    Experiment {
        real: PathBuf,
        id: u8,
        detector: DetectorSpec,
        config: ChallengeConfig,
        roc: bool,
    },
    Features {
        segments: PathBuf,
        family: FeatureFamily,
    },
    Train {
        data: DataSource,
        detector: DetectorSpec,
        seed: u64,
    },
    Score {
        model: PathBuf,
        data: DataSource,
    },
    Auc {
        scores: PathBuf,
        key: PathBuf,
        roc: bool,
    },
    Compare {
        real: PathBuf,
        generators: Vec<GeneratorSpec>,
        detectors: Vec<DetectorSpec>,
        config: ChallengeConfig,
        roc: bool,
    },
}

impl Job {
    pub fn name(&self) -> &'static str {
        match self {
            Job::Ingest { .. } => "ingest",
            Job::Simulate { .. } => "simulate",
            Job::Trends { .. } => "trends",
            Job::Challenge { .. } => "challenge",
            Job::Experiment { .. } => "experiment",
            Job::Features { .. } => "features",
            Job::Train { .. } => "train",
            Job::Score { .. } => "score",
            Job::Auc { .. } => "auc",
            Job::Compare { .. } => "compare",
        }
    }

    pub fn inputs(&self) -> Vec<PathBuf> {
        let data = |d: &DataSource| match d {
            DataSource::Features { path } => vec![path.clone(), io::sidecar_path(path)],
            DataSource::Segments { path } => vec![path.clone()],
        };
        match self {
            Job::Ingest { prices, .. } => vec![prices.clone()],
            Job::Simulate { source, .. } => match source {
                ModelSource::Fit { panel, .. } => vec![panel.clone()],
                ModelSource::Archive { path } => vec![path.clone()],
            },
            Job::Trends { panel, .. } => vec![panel.clone()],
            Job::Challenge { real, sim_panel, .. } => std::iter::once(real.clone()).chain(sim_panel.clone()).collect(),
            Job::Experiment { real, .. } | Job::Compare { real, .. } => vec![real.clone()],
            Job::Features { segments, .. } => vec![segments.clone()],
            Job::Train { data: d, .. } => data(d),
            Job::Score { model, data: d } => std::iter::once(model.clone()).chain(data(d)).collect(),
            Job::Auc { scores, key, .. } => vec![scores.clone(), key.clone()],
        }
    }

    pub fn seeds(&self) -> BTreeMap<String, u64> {
        let seed = match self {
            Job::Simulate { seed, .. } | Job::Train { seed, .. } => Some(*seed),
            Job::Challenge { config, .. } | Job::Experiment { config, .. } | Job::Compare { config, .. } => {
                Some(config.seed)
            }
            _ => None,
        };
        seed.into_iter().map(|s| ("master".to_string(), s)).collect()
    }
}

/// Output directory that remembers which files were written.
pub struct Out {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Out {
    pub fn new(dir: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Out {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    /// Absolute path for a relative output name, recorded for the manifest.
    pub fn file(&mut self, rel: impl Into<PathBuf>) -> PathBuf {
        let rel = rel.into();
        let p = self.dir.join(&rel);
        self.written.push(rel);
        p
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

/// Runs `job` into `out_dir` and writes its manifest. Returns the manifest
/// and a short human-readable summary.
pub fn execute(job: &Job, out_dir: &Path, config_file: Option<&Path>) -> CliResult<(Manifest, String)> {
    let started_at = now_rfc3339();
    let inputs = job
        .inputs()
        .iter()
        .map(|p| FileDigest::of(p, p.clone()))
        .collect::<CliResult<Vec<_>>>()?;
    let config_file = config_file.map(|p| FileDigest::of(p, p.to_path_buf())).transpose()?;
    let mut out = Out::new(out_dir)?;
    let summary = run(job, &mut out)?;
    let manifest = Manifest {
        manifest_version: MANIFEST_VERSION,
        versions: Versions::current(),
        job: job.clone(),
        seeds: job.seeds(),
        inputs,
        outputs: digest_outputs(out.dir(), &out.written)?,
        config_file,
        started_at,
        finished_at: now_rfc3339(),
    };
    manifest.write(out_dir)?;
    Ok((manifest, summary))
}

fn run(job: &Job, out: &mut Out) -> CliResult<String> {
    match job {
        Job::Ingest { prices, coverage } => {
            let records = io::read_prices(prices)?;
            let (panel, report) = ingest::align(&records, *coverage).map_err(|e| e.at(prices))?;
            io::write_panel(&out.file("panel.csv"), &panel)?;
            io::write_bytes(&out.file("ingest_report.txt"), report.render().as_bytes())?;
            Ok(format!(
                "panel {} assets x {} returns; {} dropped",
                panel.n_assets(),
                panel.n_steps(),
                report.dropped.len()
            ))
        }
        Job::Simulate {
            source,
            assets,
            length,
            seed,
        } => simulate(source, *assets, *length, *seed, out),
        Job::Trends { panel, trend } => {
            let p = io::read_panel(panel)?;
            let seg = trend.segment(&p)?;
            io::write_trends(&out.file("trends.csv"), &seg.intervals)?;
            Ok(format!("{} trends over {} steps", seg.intervals.len(), p.n_steps()))
        }
        Job::Challenge {
            real,
            generator,
            sim_panel,
            detector,
            config,
            roc,
        } => {
            let real = io::read_panel(real)?;
            let side = prepare_real(&real, config)?;
            let model = match (generator, sim_panel) {
                (Some(g), None) => {
                    let m = g.fit(&side.panel)?;
                    archive::save(&out.file("generator.json"), &m)?;
                    m
                }
                (None, Some(p)) => GeneratorModel::replay("external", io::read_panel(p)?),
                _ => {
                    return Err(CliError::validation(
                        "challenge needs exactly one of a generator or a simulated panel",
                    ))
                }
            };
            let result = run_prepared(&side, &model, detector, config)?;
            write_result(&result, detector.family, *roc, out)?;
            Ok(format!(
                "{} vs {}: AUC {}",
                result.generator,
                result.detector,
                io::fmt_f64(result.auc)
            ))
        }
        Job::Experiment {
            real,
            id,
            detector,
            config,
            roc,
        } => {
            let real = io::read_panel(real)?;
            let result = run_control_experiment(&real, *id, detector, config)?;
            write_result(&result, detector.family, *roc, out)?;
            Ok(format!(
                "experiment {id} with {}: AUC {}",
                result.detector,
                io::fmt_f64(result.auc)
            ))
        }
        Job::Features { segments, family } => {
            let items = io::read_segments(segments)?;
            let fm = extract(*family, &items).map_err(|e| e.at(segments))?;
            io::write_features(&out.file("features.csv"), &fm)?;
            out.file("features.meta.json");
            Ok(format!(
                "{} rows x {} {} features",
                fm.n_rows(),
                fm.values.n_cols(),
                family
            ))
        }
        Job::Train { data, detector, seed } => {
            let fm = load_rows(data, detector.family)?;
            let y = fm
                .labels
                .as_deref()
                .ok_or_else(|| CliError::validation("training rows need labels"))?;
            let model = detector
                .classifier
                .train(&fm.values, y, derive_seed(*seed, "detector"))?;
            let trained = TrainedDetector {
                name: detector.name.clone(),
                family: detector.family,
                model,
            };
            archive::save(&out.file("detector.json"), &trained)?;
            Ok(format!("trained {} on {} rows", detector.name, fm.n_rows()))
        }
        Job::Score { model, data } => {
            let trained: TrainedDetector = archive::load(model)?;
            let fm = load_rows(data, trained.family)?;
            let scores = trained.model.score(&fm.values)?;
            io::write_scores(&out.file("scores.csv"), &fm.segment_ids, &scores)?;
            Ok(format!("scored {} rows", scores.len()))
        }
        Job::Auc { scores, key, roc } => {
            let scores = io::read_scores(scores)?;
            let key: BTreeMap<String, Label> = io::read_key(key)?.into_iter().collect();
            let mut labels = Vec::with_capacity(scores.len());
            for (id, _) in &scores {
                let l = key
                    .get(id)
                    .ok_or_else(|| CliError::validation(format!("segment {id} has no entry in the key")))?;
                labels.push(l.class());
            }
            if key.len() != scores.len() {
                return Err(CliError::validation(format!(
                    "key has {} entries but {} segments were scored",
                    key.len(),
                    scores.len()
                )));
            }
            let values: Vec<f64> = scores.iter().map(|(_, s)| *s).collect();
            let r = roc_auc(&values, &labels)?;
            let text = format!(
                "auc,{}\nn_simulated,{}\nn_real,{}\n",
                io::fmt_f64(r.auc),
                r.n_pos,
                r.n_neg
            );
            io::write_bytes(&out.file("auc.txt"), text.as_bytes())?;
            if *roc {
                io::write_roc(&out.file("roc.csv"), &r.points)?;
            }
            Ok(format!("AUC {}", io::fmt_f64(r.auc)))
        }
        Job::Compare {
            real,
            generators,
            detectors,
            config,
            roc,
        } => compare(&io::read_panel(real)?, generators, detectors, config, *roc, out),
    }
}

fn extract(family: FeatureFamily, items: &[(String, Segment)]) -> CliResult<FeatureMatrix> {
    let (ids, segs): (Vec<String>, Vec<Segment>) = items.iter().cloned().unzip();
    Ok(FeatureMatrix::extract(family, &segs, ids)?)
}

fn load_rows(data: &DataSource, family: FeatureFamily) -> CliResult<FeatureMatrix> {
    match data {
        DataSource::Segments { path } => extract(family, &io::read_segments(path)?).map_err(|e| e.at(path)),
        DataSource::Features { path } => {
            let fm = io::read_features(path)?;
            if fm.family != family {
                return Err(CliError::validation(format!(
                    "{}: holds {} features, the detector uses {family}",
                    path.display(),
                    fm.family
                )));
            }
            Ok(fm)
        }
    }
}

fn simulate(
    source: &ModelSource,
    assets: Option<usize>,
    length: Option<usize>,
    seed: u64,
    out: &mut Out,
) -> CliResult<String> {
    let (model, fitted_shape) = match source {
        ModelSource::Fit { panel, generator } => {
            let p = io::read_panel(panel)?;
            let m = generator.fit(&p)?;
            archive::save(&out.file("generator.json"), &m)?;
            (m, Some((p.n_assets(), p.n_steps())))
        }
        ModelSource::Archive { path } => (archive::load::<GeneratorModel>(path)?, None),
    };
    let missing = || CliError::validation("--assets and --length are required when simulating from an archive");
    let n_assets = assets.or(fitted_shape.map(|s| s.0)).ok_or_else(missing)?;
    let n_steps = length.or(fitted_shape.map(|s| s.1)).ok_or_else(missing)?;
    let mut report = String::new();
    let _ = writeln!(report, "method: {}", model.name());
    let _ = writeln!(report, "assets: {n_assets}");
    let _ = writeln!(report, "length: {n_steps}");
    let _ = writeln!(report, "seed: {seed}");
    let panel = match &model {
        GeneratorModel::Sde(m) => {
            let (p, diag) = m.simulate(n_assets, n_steps, seed)?;
            let _ = writeln!(report, "price floor hits: {}", diag.floor_hits);
            p
        }
        GeneratorModel::M1(m) => {
            let enlarged = n_assets > m.n_assets;
            let _ = writeln!(report, "fitted assets: {}", m.n_assets);
            let _ = writeln!(report, "pca enlargement: {}", if enlarged { "yes" } else { "no" });
            model.simulate(n_assets, n_steps, seed)?
        }
        _ => model.simulate(n_assets, n_steps, seed)?,
    };
    io::write_panel(&out.file("simulated.csv"), &panel)?;
    io::write_bytes(&out.file("simulate_report.txt"), report.as_bytes())?;
    Ok(format!(
        "{} panel {} x {}",
        model.name(),
        panel.n_assets(),
        panel.n_steps()
    ))
}

/// Asset ids feeding each side of a challenge, for auditing disjointness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideAssets {
    pub real: Vec<String>,
    pub simulated: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultSummary {
    pub generator: String,
    pub detector: String,
    pub auc: f64,
    pub n_simulated: usize,
    pub n_real: usize,
    /// Hash of the real test segments; equal across runs sharing them.
    pub real_test_hash: String,
    pub config: ChallengeConfig,
    pub train_assets: SideAssets,
    pub test_assets: SideAssets,
}

impl ResultSummary {
    pub fn of(r: &ChallengeResult) -> Self {
        let ids = |it: &mut dyn Iterator<Item = &realism_core::Origin>| -> Vec<String> {
            it.map(|o| o.asset_id.clone())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect()
        };
        ResultSummary {
            generator: r.generator.clone(),
            detector: r.detector.clone(),
            auc: r.auc,
            n_simulated: r.evaluation.roc.n_pos,
            n_real: r.evaluation.roc.n_neg,
            real_test_hash: format!("{:016x}", r.real_test_hash),
            config: r.config.clone(),
            train_assets: SideAssets {
                real: ids(&mut r.train_origins(Label::Real)),
                simulated: ids(&mut r.train_origins(Label::Simulated)),
            },
            test_assets: SideAssets {
                real: ids(&mut r.test_origins(Label::Real)),
                simulated: ids(&mut r.test_origins(Label::Simulated)),
            },
        }
    }
}

/// Bundle (`train.csv`, `test.csv`, `key.csv`), test scores, the trained
/// detector, a JSON result and a text summary.
fn write_result(r: &ChallengeResult, family: FeatureFamily, roc: bool, out: &mut Out) -> CliResult<()> {
    io::write_segments(&out.file("train.csv"), &r.bundle.train, true)?;
    io::write_segments(&out.file("test.csv"), &r.bundle.test, false)?;
    io::write_key(&out.file("key.csv"), &r.bundle.test)?;
    io::write_scores(&out.file("scores.csv"), &r.evaluation.test_ids, &r.evaluation.scores)?;
    let trained = TrainedDetector {
        name: r.detector.clone(),
        family,
        model: r.evaluation.model.clone(),
    };
    archive::save(&out.file("detector.json"), &trained)?;
    let summary = ResultSummary::of(r);
    io::write_json(&out.file("result.json"), &summary)?;
    let text = format!(
        "generator: {}\ndetector: {}\nauc: {}\ntest segments: {} real, {} simulated\nreal test hash: {}\n",
        summary.generator, summary.detector, summary.auc, summary.n_real, summary.n_simulated, summary.real_test_hash
    );
    io::write_bytes(&out.file("summary.txt"), text.as_bytes())?;
    if roc {
        io::write_roc(&out.file("roc.csv"), &r.evaluation.roc.points)?;
    }
    Ok(())
}

fn compare(
    real: &Panel,
    generators: &[GeneratorSpec],
    detectors: &[DetectorSpec],
    cfg: &ChallengeConfig,
    roc: bool,
    out: &mut Out,
) -> CliResult<String> {
    if generators.is_empty() || detectors.is_empty() {
        return Err(CliError::validation(
            "compare needs at least one generator and one detector",
        ));
    }
    let side = prepare_real(real, cfg)?;
    let models: Vec<_> = generators.par_iter().map(|g| g.fit(&side.panel)).collect();
    let nd = detectors.len();
    let cells: Vec<realism_core::Result<ChallengeResult>> = (0..generators.len() * nd)
        .into_par_iter()
        .map(|k| match &models[k / nd] {
            Ok(m) => run_prepared(&side, m, &detectors[k % nd], cfg),
            Err(e) => Err(e.clone()),
        })
        .collect();

    let det_names: Vec<String> = detectors.iter().map(|d| d.name.clone()).collect();
    let mut csv = format!("generator,{}\n", det_names.join(","));
    let mut text = String::new();
    let _ = writeln!(
        text,
        "AUC by generator (rows) and detector (columns); lower means harder to tell from real data"
    );
    let _ = writeln!(text, "real test hash: {:016x}", side.test_hash());
    let mut errors = Vec::new();
    let mut details = Vec::new();
    for (g, spec) in generators.iter().enumerate() {
        let mut row = vec![spec.name().to_string()];
        let mut aucs = Vec::new();
        for (d, det) in det_names.iter().enumerate() {
            match &cells[g * nd + d] {
                Ok(r) => {
                    row.push(io::fmt_f64(r.auc));
                    aucs.push(r.auc);
                    if roc {
                        io::write_roc(
                            &out.file(format!("roc/{}__{}.csv", spec.name(), det)),
                            &r.evaluation.roc.points,
                        )?;
                    }
                    details.push(CellDetail {
                        generator: spec.name().into(),
                        detector: det.clone(),
                        result: Some(ResultSummary::of(r)),
                        error: None,
                    });
                }
                Err(e) => {
                    row.push("error".into());
                    errors.push(format!("{} x {}: {e}", spec.name(), det));
                    details.push(CellDetail {
                        generator: spec.name().into(),
                        detector: det.clone(),
                        result: None,
                        error: Some(e.to_string()),
                    });
                }
            }
        }
        csv.push_str(&row.join(","));
        csv.push('\n');
        let mean = if aucs.is_empty() {
            "n/a".to_string()
        } else {
            format!("{:.4}", aucs.iter().sum::<f64>() / aucs.len() as f64)
        };
        let _ = writeln!(text, "{:<10} {}  mean {mean}", spec.name(), row[1..].join("  "));
    }
    for e in &errors {
        let _ = writeln!(text, "failed: {e}");
    }
    io::write_bytes(&out.file("report.csv"), csv.as_bytes())?;
    io::write_bytes(&out.file("summary.txt"), text.as_bytes())?;
    io::write_json(&out.file("report.json"), &details)?;
    if errors.len() == cells.len() {
        let first = cells.into_iter().find_map(Result::err).expect("all cells failed");
        return Err(CliError::from(first));
    }
    Ok(text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellDetail {
    pub generator: String,
    pub detector: String,
    pub result: Option<ResultSummary>,
    pub error: Option<String>,
}
