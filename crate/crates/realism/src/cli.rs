//! Command-line surface: argument parsing, resolution of flags against the
//! run file and the data directory, and dispatch.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use realism_core::generators::{GeneratorSpec, TrendConfig};
use realism_core::learn::DetectorSpec;

use crate::commands::{execute, DataSource, Job, ModelSource};
use crate::config::{self, ChallengeSection, RunConfig};
use crate::error::{CliError, CliResult};
use crate::ingest::DEFAULT_COVERAGE;
use crate::selftest;

/// Environment variable naming the default data directory.
pub const DATA_DIR_ENV: &str = "REALISM_DATA_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "realism",
    version,
    about = "Measure how distinguishable simulated return series are from real ones"
)]
pub struct Cli {
    /// TOML run file; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Base directory for relative paths (default: $REALISM_DATA_DIR).
    #[arg(long, global = true, value_name = "DIR")]
    pub data_dir: Option<PathBuf>,
    /// Worker threads for parallel work; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct ChallengeFlags {
    #[arg(long)]
    pub segment_length: Option<usize>,
    #[arg(long)]
    pub segments_per_class: Option<usize>,
    /// Share of assets whose segments form the training set.
    #[arg(long)]
    pub train_fraction: Option<f64>,
    /// Duplicate-breaking noise amplitude applied to both classes.
    #[arg(long)]
    pub noise: Option<f64>,
    /// Simulated panel size (default: same as the real panel).
    #[arg(long)]
    pub sim_assets: Option<usize>,
    #[arg(long)]
    pub sim_length: Option<usize>,
}

impl ChallengeFlags {
    fn section(&self) -> ChallengeSection {
        ChallengeSection {
            segment_length: self.segment_length,
            segments_per_class: self.segments_per_class,
            train_fraction: self.train_fraction,
            noise: self.noise,
            sim_assets: self.sim_assets,
            sim_length: self.sim_length,
        }
    }
}

#[derive(Debug, Args, Default)]
pub struct TrendFlags {
    /// Minimum relative index move that confirms a reversal.
    #[arg(long)]
    pub min_move: Option<f64>,
    /// Minimum trend length in steps.
    #[arg(long)]
    pub min_length: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Align a `date,asset_id,price` file into a return panel.
    Ingest {
        #[arg(long)]
        prices: Option<PathBuf>,
        /// Minimum share of dates an asset must cover to be kept.
        #[arg(long)]
        coverage: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit a generator on a panel (or load an archive) and simulate.
    Simulate {
        #[arg(long)]
        panel: Option<PathBuf>,
        /// Fitted generator archive to simulate from instead of fitting.
        #[arg(long, conflicts_with = "panel")]
        model: Option<PathBuf>,
        /// m1, m2, gbm, cev, egarch or gjr.
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        assets: Option<usize>,
        #[arg(long)]
        length: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Method 1 moment window.
        #[arg(long)]
        window: Option<usize>,
        #[command(flatten)]
        trend: TrendFlags,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Segment the equal-weight index of a panel into up and down trends.
    Trends {
        #[arg(long)]
        panel: Option<PathBuf>,
        #[command(flatten)]
        trend: TrendFlags,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the real-versus-simulated challenge for one generator and detector.
    Challenge {
        #[arg(long)]
        real: Option<PathBuf>,
        #[arg(long)]
        generator: Option<String>,
        /// Externally simulated panel used as the simulated class.
        #[arg(long, conflicts_with = "generator")]
        sim_panel: Option<PathBuf>,
        /// reference1, reference2, reference3, system2 or system7.
        #[arg(long)]
        detector: Option<String>,
        #[command(flatten)]
        challenge: ChallengeFlags,
        #[command(flatten)]
        trend: TrendFlags,
        #[arg(long)]
        seed: Option<u64>,
        /// Also write ROC points.
        #[arg(long)]
        roc: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Real-versus-real control experiment 1-4.
    Experiment {
        #[arg(long)]
        real: Option<PathBuf>,
        #[arg(long)]
        id: Option<u8>,
        #[arg(long)]
        detector: Option<String>,
        #[command(flatten)]
        challenge: ChallengeFlags,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        roc: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Extract one feature family from a segment file.
    Features {
        #[arg(long)]
        segments: Option<PathBuf>,
        /// acf_returns, acf_absolute, statistics, sorted or reoccurrence.
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a detector on labelled features or segments.
    Train {
        #[arg(long)]
        features: Option<PathBuf>,
        #[arg(long, conflicts_with = "features")]
        segments: Option<PathBuf>,
        /// Detector preset (feature family plus classifier).
        #[arg(long)]
        detector: Option<String>,
        /// knn, tree, bagged or gboost; pairs with --family or the feature sidecar.
        #[arg(long, conflicts_with = "detector")]
        classifier: Option<String>,
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score features or segments with a trained detector.
    Score {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        features: Option<PathBuf>,
        #[arg(long, conflicts_with = "features")]
        segments: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// ROC-AUC of a score file against an answer key.
    Auc {
        #[arg(long)]
        scores: Option<PathBuf>,
        #[arg(long)]
        key: Option<PathBuf>,
        #[arg(long)]
        roc: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generators x detectors AUC matrix on shared real segments.
    Compare {
        #[arg(long)]
        real: Option<PathBuf>,
        /// Comma-separated generator names.
        #[arg(long, value_delimiter = ',')]
        generators: Vec<String>,
        /// Comma-separated detector presets.
        #[arg(long, value_delimiter = ',')]
        detectors: Vec<String>,
        #[command(flatten)]
        challenge: ChallengeFlags,
        #[command(flatten)]
        trend: TrendFlags,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        roc: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run a manifest and check outputs are byte-identical; without
    /// --manifest, run the whole pipeline on generated data and check every step.
    Selftest {
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Keep the generated pipeline here instead of a temporary directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    init_logging(cli.verbose);
    match run(cli) {
        Ok(msg) => {
            println!("{msg}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}

pub fn run(cli: Cli) -> CliResult<String> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(n) = cli.threads.or(cfg.threads) {
        if n == 0 {
            return Err(CliError::validation("--threads must be at least 1"));
        }
        // A pool may already exist when called repeatedly in one process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let data_dir = cli
        .data_dir
        .clone()
        .or_else(|| cfg.data_dir.clone())
        .or_else(|| std::env::var_os(DATA_DIR_ENV).map(PathBuf::from));
    let r = Resolver { cfg: &cfg, data_dir };
    if let Command::Selftest { manifest, out } = &cli.command {
        return match manifest {
            Some(m) => selftest::replay_report(&r.input(Some(m.clone()), None, "--manifest")?),
            None => selftest::pipeline(out.as_ref().map(|o| r.path(o)).as_deref()),
        };
    }
    let (job, out) = r.job(cli.command)?;
    let config_file = cli.config.as_deref().map(Path::to_path_buf);
    let (manifest, summary) = execute(&job, &out, config_file.as_deref())?;
    Ok(format!(
        "{summary}\nwrote {} files and manifest to {}",
        manifest.outputs.len(),
        out.display()
    ))
}

struct Resolver<'a> {
    cfg: &'a RunConfig,
    data_dir: Option<PathBuf>,
}

impl Resolver<'_> {
    fn path(&self, p: &Path) -> PathBuf {
        match &self.data_dir {
            Some(d) if p.is_relative() => d.join(p),
            _ => p.to_path_buf(),
        }
    }

    /// Flag, then run-file value; resolved and made absolute.
    fn input(&self, flag: Option<PathBuf>, file: Option<&PathBuf>, name: &str) -> CliResult<PathBuf> {
        let p = flag
            .or_else(|| file.cloned())
            .ok_or_else(|| CliError::validation(format!("missing {name}")))?;
        let p = self.path(&p);
        std::fs::canonicalize(&p).map_err(|e| CliError::io(&p, e))
    }

    fn optional_input(&self, flag: Option<PathBuf>, file: Option<&PathBuf>) -> CliResult<Option<PathBuf>> {
        match flag.or_else(|| file.cloned()) {
            Some(p) => self.input(Some(p), None, "").map(Some),
            None => Ok(None),
        }
    }

    fn out(&self, flag: Option<PathBuf>, command: &str) -> PathBuf {
        let p = flag
            .or_else(|| self.cfg.out.clone())
            .unwrap_or_else(|| PathBuf::from(command));
        self.path(&p)
    }

    fn seed(&self, flag: Option<u64>) -> u64 {
        flag.or(self.cfg.seed).unwrap_or(0)
    }

    fn trend(&self, flags: &TrendFlags) -> TrendConfig {
        let mut t = self.cfg.trend.unwrap_or_default();
        if let Some(m) = flags.min_move {
            t.min_move = m;
        }
        if let Some(l) = flags.min_length {
            t.min_length = l;
        }
        t
    }

    /// Named trend methods pick up trend and window settings; tables from
    /// the run file are taken as written.
    fn generator(&self, name: Option<String>, trend: &TrendFlags, window: Option<usize>) -> CliResult<GeneratorSpec> {
        let spec = match name {
            Some(n) => config::parse_generator(&n)?,
            None => match &self.cfg.generator {
                Some(toml::Value::Table(_)) => {
                    return config::generator_entry(self.cfg.generator.as_ref().expect("checked"))
                }
                Some(v) => config::generator_entry(v)?,
                None => return Err(CliError::validation("missing --generator")),
            },
        };
        Ok(self.tune(spec, trend, window))
    }

    fn tune(&self, spec: GeneratorSpec, trend: &TrendFlags, window: Option<usize>) -> GeneratorSpec {
        match spec {
            GeneratorSpec::M1 { window: w, .. } => GeneratorSpec::M1 {
                window: window.unwrap_or(w),
                trend: self.trend(trend),
            },
            GeneratorSpec::M2 { .. } => GeneratorSpec::M2 {
                trend: self.trend(trend),
            },
            other => other,
        }
    }

    fn detector(&self, name: Option<String>) -> CliResult<DetectorSpec> {
        match (name, &self.cfg.detector) {
            (Some(n), _) => config::parse_detector(&n),
            (None, Some(v)) => config::detector_entry(v),
            (None, None) => Err(CliError::validation("missing --detector")),
        }
    }

    fn job(&self, command: Command) -> CliResult<(Job, PathBuf)> {
        let cfg = self.cfg;
        Ok(match command {
            Command::Ingest { prices, coverage, out } => (
                Job::Ingest {
                    prices: self.input(prices, cfg.prices.as_ref(), "--prices")?,
                    coverage: coverage.or(cfg.coverage).unwrap_or(DEFAULT_COVERAGE),
                },
                self.out(out, "ingest"),
            ),
            Command::Simulate {
                panel,
                model,
                method,
                assets,
                length,
                seed,
                window,
                trend,
                out,
            } => {
                let source = match self.optional_input(model, cfg.model.as_ref())? {
                    Some(path) => ModelSource::Archive { path },
                    None => ModelSource::Fit {
                        panel: self.input(panel, cfg.panel.as_ref().or(cfg.real.as_ref()), "--panel or --model")?,
                        generator: self.generator(method, &trend, window)?,
                    },
                };
                (
                    Job::Simulate {
                        source,
                        assets: assets.or(cfg.assets),
                        length: length.or(cfg.length),
                        seed: self.seed(seed),
                    },
                    self.out(out, "simulate"),
                )
            }
            Command::Trends { panel, trend, out } => (
                Job::Trends {
                    panel: self.input(panel, cfg.panel.as_ref().or(cfg.real.as_ref()), "--panel")?,
                    trend: self.trend(&trend),
                },
                self.out(out, "trends"),
            ),
            Command::Challenge {
                real,
                generator,
                sim_panel,
                detector,
                challenge,
                trend,
                seed,
                roc,
                out,
            } => {
                let sim_panel = self.optional_input(
                    sim_panel,
                    if generator.is_some() {
                        None
                    } else {
                        cfg.sim_panel.as_ref()
                    },
                )?;
                let generator = match sim_panel {
                    Some(_) => None,
                    None => Some(self.generator(generator, &trend, None)?),
                };
                (
                    Job::Challenge {
                        real: self.input(real, cfg.real.as_ref().or(cfg.panel.as_ref()), "--real")?,
                        generator,
                        sim_panel,
                        detector: self.detector(detector)?,
                        config: self.challenge(&challenge, seed)?,
                        roc: roc || cfg.roc.unwrap_or(false),
                    },
                    self.out(out, "challenge"),
                )
            }
            Command::Experiment {
                real,
                id,
                detector,
                challenge,
                seed,
                roc,
                out,
            } => {
                let id = id
                    .or(cfg.experiment)
                    .ok_or_else(|| CliError::validation("missing --id"))?;
                if !(1..=4).contains(&id) {
                    return Err(CliError::validation("--id must be 1, 2, 3 or 4"));
                }
                (
                    Job::Experiment {
                        real: self.input(real, cfg.real.as_ref().or(cfg.panel.as_ref()), "--real")?,
                        id,
                        detector: self.detector(detector)?,
                        config: self.challenge(&challenge, seed)?,
                        roc: roc || cfg.roc.unwrap_or(false),
                    },
                    self.out(out, "experiment"),
                )
            }
            Command::Features { segments, family, out } => (
                Job::Features {
                    segments: self.input(segments, cfg.segments.as_ref(), "--segments")?,
                    family: self
                        .family(family)?
                        .ok_or_else(|| CliError::validation("missing --family"))?,
                },
                self.out(out, "features"),
            ),
            Command::Train {
                features,
                segments,
                detector,
                classifier,
                family,
                seed,
                out,
            } => {
                let data = self.data(features, segments)?;
                let detector = match (&classifier, &cfg.classifier, &detector) {
                    (None, None, _) | (None, Some(_), Some(_)) => self.detector(detector)?,
                    _ => {
                        let spec = match classifier {
                            Some(c) => config::parse_classifier(&c)?,
                            None => config::classifier_entry(cfg.classifier.as_ref().expect("matched"))?,
                        };
                        let family = match (self.family(family)?, &data) {
                            (Some(f), _) => f,
                            (None, DataSource::Features { path }) => crate::io::read_features(path)?.family,
                            (None, DataSource::Segments { .. }) => {
                                return Err(CliError::validation("--classifier with --segments needs --family"))
                            }
                        };
                        DetectorSpec::new(&format!("{}-{}", family.name(), spec.name()), family, spec)
                    }
                };
                (
                    Job::Train {
                        data,
                        detector,
                        seed: self.seed(seed),
                    },
                    self.out(out, "train"),
                )
            }
            Command::Score {
                model,
                features,
                segments,
                out,
            } => (
                Job::Score {
                    model: self.input(model, cfg.model.as_ref(), "--model")?,
                    data: self.data(features, segments)?,
                },
                self.out(out, "score"),
            ),
            Command::Auc { scores, key, roc, out } => (
                Job::Auc {
                    scores: self.input(scores, cfg.scores.as_ref(), "--scores")?,
                    key: self.input(key, cfg.key.as_ref(), "--key")?,
                    roc: roc || cfg.roc.unwrap_or(false),
                },
                self.out(out, "auc"),
            ),
            Command::Compare {
                real,
                generators,
                detectors,
                challenge,
                trend,
                seed,
                roc,
                out,
            } => {
                let generators = if generators.is_empty() {
                    cfg.generators
                        .iter()
                        .flatten()
                        .map(|v| {
                            let spec = config::generator_entry(v)?;
                            Ok(if v.is_str() {
                                self.tune(spec, &trend, None)
                            } else {
                                spec
                            })
                        })
                        .collect::<CliResult<Vec<_>>>()?
                } else {
                    generators
                        .iter()
                        .map(|g| Ok(self.tune(config::parse_generator(g)?, &trend, None)))
                        .collect::<CliResult<Vec<_>>>()?
                };
                let detectors = if detectors.is_empty() {
                    cfg.detectors
                        .iter()
                        .flatten()
                        .map(config::detector_entry)
                        .collect::<CliResult<Vec<_>>>()?
                } else {
                    detectors
                        .iter()
                        .map(|d| config::parse_detector(d))
                        .collect::<CliResult<Vec<_>>>()?
                };
                (
                    Job::Compare {
                        real: self.input(real, cfg.real.as_ref().or(cfg.panel.as_ref()), "--real")?,
                        generators,
                        detectors,
                        config: self.challenge(&challenge, seed)?,
                        roc: roc || cfg.roc.unwrap_or(false),
                    },
                    self.out(out, "compare"),
                )
            }
            Command::Selftest { .. } => unreachable!("handled before job resolution"),
        })
    }

    fn family(&self, flag: Option<String>) -> CliResult<Option<realism_core::features::FeatureFamily>> {
        match flag {
            Some(f) => config::parse_family(&f).map(Some),
            None => Ok(self.cfg.family),
        }
    }

    fn data(&self, features: Option<PathBuf>, segments: Option<PathBuf>) -> CliResult<DataSource> {
        if features.is_some() || (segments.is_none() && self.cfg.features.is_some() && self.cfg.segments.is_none()) {
            return Ok(DataSource::Features {
                path: self.input(features, self.cfg.features.as_ref(), "--features")?,
            });
        }
        Ok(DataSource::Segments {
            path: self.input(segments, self.cfg.segments.as_ref(), "--features or --segments")?,
        })
    }

    fn challenge(&self, flags: &ChallengeFlags, seed: Option<u64>) -> CliResult<realism_core::eval::ChallengeConfig> {
        let mut c = self.cfg.challenge_config(Some(&flags.section()))?;
        c.seed = self.seed(seed);
        c.validate()?;
        Ok(c)
    }
}
