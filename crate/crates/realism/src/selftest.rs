//! Reproducibility checks: replaying manifests and an end-to-end pipeline
//! on generated data.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate, Weekday};

use realism_core::generators::garch::simulate_returns;
use realism_core::generators::{GarchKind, GarchParams, GeneratorSpec, TrendConfig};
use realism_core::learn::DetectorSpec;
use realism_core::rng::derive_indexed;
use realism_core::series::compound_prices;

use crate::commands::{execute, DataSource, Job, ModelSource, ResultSummary};
use crate::error::{CliError, CliResult};
use crate::io::{self, PriceRecord};
use crate::manifest::{digest_outputs, Manifest};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FileStatus {
    Identical,
    Differs,
    Missing,
    Unexpected,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replay {
    pub changed_inputs: Vec<PathBuf>,
    pub files: Vec<(PathBuf, FileStatus)>,
}

impl Replay {
    pub fn identical(&self) -> bool {
        self.changed_inputs.is_empty() && self.files.iter().all(|(_, s)| *s == FileStatus::Identical)
    }
}

/// Re-runs the manifest's job in a scratch directory and compares every
/// output file byte for byte (via SHA-256).
pub fn replay(manifest: &Manifest) -> CliResult<Replay> {
    let changed_inputs = manifest.changed_inputs()?;
    if !changed_inputs.is_empty() {
        return Ok(Replay {
            changed_inputs,
            files: Vec::new(),
        });
    }
    let scratch = tempfile::tempdir().map_err(|e| CliError::io(std::env::temp_dir(), e))?;
    let (rerun, _) = execute(&manifest.job, scratch.path(), None)?;
    let fresh = digest_outputs(
        scratch.path(),
        &rerun.outputs.iter().map(|d| d.path.clone()).collect::<Vec<_>>(),
    )?;
    let mut files = Vec::new();
    for d in &manifest.outputs {
        let status = match fresh.iter().find(|f| f.path == d.path) {
            Some(f) if f == d => FileStatus::Identical,
            Some(_) => FileStatus::Differs,
            None => FileStatus::Missing,
        };
        files.push((d.path.clone(), status));
    }
    for f in &fresh {
        if !manifest.outputs.iter().any(|d| d.path == f.path) {
            files.push((f.path.clone(), FileStatus::Unexpected));
        }
    }
    Ok(Replay {
        changed_inputs: Vec::new(),
        files,
    })
}

pub fn replay_report(manifest_path: &Path) -> CliResult<String> {
    let manifest = Manifest::read(manifest_path)?;
    let r = replay(&manifest)?;
    if !r.changed_inputs.is_empty() {
        let names: Vec<String> = r.changed_inputs.iter().map(|p| p.display().to_string()).collect();
        return Err(CliError::validation(format!(
            "inputs changed since the manifest was written: {}",
            names.join(", ")
        )));
    }
    let mut text = String::new();
    for (p, s) in &r.files {
        let _ = writeln!(text, "{:<10} {}", format!("{s:?}").to_lowercase(), p.display());
    }
    if r.identical() {
        let _ = write!(
            text,
            "{} job reproduced: {} files identical",
            manifest.job.name(),
            r.files.len()
        );
        Ok(text)
    } else {
        Err(CliError::Numerical(format!(
            "{}{} job did not reproduce",
            text,
            manifest.job.name()
        )))
    }
}

/// Business-day price file for 8 GJR-driven assets; one asset covers only
/// the second half of the calendar and another has scattered gaps.
pub fn synthetic_prices(n_dates: usize, seed: u64) -> CliResult<Vec<PriceRecord>> {
    let mut dates = Vec::with_capacity(n_dates);
    let mut d = NaiveDate::from_ymd_opt(2015, 1, 1).expect("valid date");
    while dates.len() < n_dates {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            dates.push(d);
        }
        d = d.succ_opt().expect("in range");
    }
    let params = GarchParams {
        kind: GarchKind::Gjr,
        mu: 3e-4,
        omega: 2e-6,
        alpha: 0.08,
        beta: 0.88,
        leverage: 0.06,
        nu: 6.0,
    };
    let mut records = Vec::new();
    let mut line = 1;
    for a in 0..8u64 {
        let returns = simulate_returns(&params, n_dates - 1, derive_indexed(seed, "selftest-asset", a))?;
        let prices = compound_prices(&returns, 10.0 + a as f64)?;
        for (t, (date, price)) in dates.iter().zip(prices).enumerate() {
            let skip = (a == 6 && t < n_dates / 2) || (a == 7 && t % 97 == 13);
            if !skip {
                line += 1;
                records.push(PriceRecord {
                    line,
                    date: *date,
                    asset_id: format!("SYN{a:02}"),
                    price,
                });
            }
        }
    }
    Ok(records)
}

struct Checks {
    text: String,
    failures: usize,
}

impl Checks {
    fn record(&mut self, name: &str, ok: bool) {
        let _ = writeln!(self.text, "{} {name}", if ok { "ok  " } else { "FAIL" });
        if !ok {
            self.failures += 1;
        }
    }
}

/// Runs every command on generated data under `root` (a temporary
/// directory when `None`), then checks that the split pipeline reproduces
/// the challenge AUC and that every manifest replays byte for byte.
pub fn pipeline(root: Option<&Path>) -> CliResult<String> {
    let scratch;
    let root = match root {
        Some(r) => {
            std::fs::create_dir_all(r).map_err(|e| CliError::io(r, e))?;
            std::fs::canonicalize(r).map_err(|e| CliError::io(r, e))?
        }
        None => {
            scratch = tempfile::tempdir().map_err(|e| CliError::io(std::env::temp_dir(), e))?;
            scratch.path().to_path_buf()
        }
    };
    let prices = root.join("prices.csv");
    io::write_prices(&prices, &synthetic_prices(900, 20)?)?;
    let seed = 11;
    let config = realism_core::eval::ChallengeConfig {
        segments_per_class: 150,
        seed,
        ..Default::default()
    };
    let preset = |n: &str| DetectorSpec::preset(n).expect("known preset");
    let dir = |n: &str| root.join(n);
    let panel = dir("ingest").join("panel.csv");
    let jobs = vec![
        (
            "ingest",
            Job::Ingest {
                prices: prices.clone(),
                coverage: 0.9,
            },
        ),
        (
            "trends",
            Job::Trends {
                panel: panel.clone(),
                trend: TrendConfig {
                    min_move: 0.05,
                    min_length: 10,
                },
            },
        ),
        (
            "simulate",
            Job::Simulate {
                source: ModelSource::Fit {
                    panel: panel.clone(),
                    generator: GeneratorSpec::Gbm,
                },
                assets: None,
                length: None,
                seed,
            },
        ),
        (
            "simulate-archive",
            Job::Simulate {
                source: ModelSource::Archive {
                    path: dir("simulate").join("generator.json"),
                },
                assets: Some(12),
                length: Some(500),
                seed,
            },
        ),
        (
            "challenge",
            Job::Challenge {
                real: panel.clone(),
                generator: Some(GeneratorSpec::Gbm),
                sim_panel: None,
                detector: preset("reference3"),
                config: config.clone(),
                roc: true,
            },
        ),
        (
            "features-train",
            Job::Features {
                segments: dir("challenge").join("train.csv"),
                family: preset("reference3").family,
            },
        ),
        (
            "features-test",
            Job::Features {
                segments: dir("challenge").join("test.csv"),
                family: preset("reference3").family,
            },
        ),
        (
            "train",
            Job::Train {
                data: DataSource::Features {
                    path: dir("features-train").join("features.csv"),
                },
                detector: preset("reference3"),
                seed,
            },
        ),
        (
            "score",
            Job::Score {
                model: dir("train").join("detector.json"),
                data: DataSource::Features {
                    path: dir("features-test").join("features.csv"),
                },
            },
        ),
        (
            "auc",
            Job::Auc {
                scores: dir("score").join("scores.csv"),
                key: dir("challenge").join("key.csv"),
                roc: false,
            },
        ),
        (
            "experiment",
            Job::Experiment {
                real: panel.clone(),
                id: 4,
                detector: preset("reference2"),
                config: config.clone(),
                roc: false,
            },
        ),
        (
            "compare",
            Job::Compare {
                real: panel.clone(),
                generators: vec![GeneratorSpec::Gbm, GeneratorSpec::Cev],
                detectors: vec![preset("reference2"), preset("reference3")],
                config: config.clone(),
                roc: false,
            },
        ),
    ];
    let mut checks = Checks {
        text: String::new(),
        failures: 0,
    };
    for (name, job) in &jobs {
        let (_, summary) = execute(job, &dir(name), None)?;
        let _ = writeln!(checks.text, "ran  {name}: {summary}");
    }

    let challenge: ResultSummary = io::read_json(&dir("challenge").join("result.json"))?;
    let auc_text = io::read_string(&dir("auc").join("auc.txt"))?;
    let split_auc = auc_text
        .lines()
        .find_map(|l| l.strip_prefix("auc,"))
        .and_then(|v| v.parse::<f64>().ok());
    checks.record(
        &format!("split pipeline AUC equals challenge AUC ({})", challenge.auc),
        split_auc == Some(challenge.auc),
    );
    let same_scores =
        std::fs::read(dir("score").join("scores.csv")).ok() == std::fs::read(dir("challenge").join("scores.csv")).ok();
    checks.record(
        "split pipeline scores equal challenge scores byte for byte",
        same_scores,
    );
    let disjoint = challenge
        .train_assets
        .real
        .iter()
        .all(|a| !challenge.test_assets.real.contains(a))
        && challenge
            .train_assets
            .simulated
            .iter()
            .all(|a| !challenge.test_assets.simulated.contains(a));
    checks.record("challenge train and test assets are disjoint", disjoint);

    for (name, _) in &jobs {
        let manifest = Manifest::read(&dir(name))?;
        let r = replay(&manifest)?;
        checks.record(
            &format!("{name} manifest replays byte-identically ({} files)", r.files.len()),
            r.identical(),
        );
    }
    let _ = write!(checks.text, "pipeline root: {}", root.display());
    if checks.failures == 0 {
        Ok(checks.text)
    } else {
        Err(CliError::Numerical(format!(
            "{}\n{} checks failed",
            checks.text, checks.failures
        )))
    }
}
