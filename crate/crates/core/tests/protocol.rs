//! End-to-end checks of the challenge protocol and the generators'
//! determinism contracts on small synthetic panels.

use rand::Rng;
use rand_distr::StandardNormal;
use realism_core::eval::{
    compare_methods, run_challenge, run_challenge_fitted, run_control_experiment, ChallengeConfig,
};
use realism_core::features::{acf, FeatureFamily};
use realism_core::generators::garch::simulate_returns;
use realism_core::generators::{
    pca_enlarge, GarchKind, GarchParams, GeneratorModel, GeneratorSpec, PcaBasis, TrendConfig,
};
use realism_core::learn::{ClassifierSpec, DetectorSpec};
use realism_core::rng::rng_from_seed;
use realism_core::{Label, Matrix, Panel};
use std::collections::BTreeSet;

fn gaussian_panel(assets: usize, steps: usize, seed: u64, sd: impl Fn(usize) -> f64) -> Panel {
    let mut rng = rng_from_seed(seed);
    let rows = (0..assets)
        .map(|_| {
            (0..steps)
                .map(|t| 0.0002 + sd(t) * rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect();
    Panel::synthetic("R", rows).unwrap()
}

fn small_config(seed: u64) -> ChallengeConfig {
    ChallengeConfig {
        segments_per_class: 200,
        seed,
        ..ChallengeConfig::default()
    }
}

fn constant() -> DetectorSpec {
    DetectorSpec::new(
        "constant",
        FeatureFamily::Statistics,
        ClassifierSpec::Constant { score: 0.3 },
    )
}

#[test]
fn constant_detector_scores_exactly_one_half() {
    let real = gaussian_panel(8, 800, 1, |_| 0.01);
    let r = run_challenge(&real, &GeneratorSpec::Gbm, &constant(), &small_config(2)).unwrap();
    assert_eq!(r.auc, 0.5);
}

#[test]
fn train_and_test_never_share_assets() {
    let real = gaussian_panel(10, 700, 3, |_| 0.01);
    let r = run_challenge(
        &real,
        &GeneratorSpec::Gbm,
        &DetectorSpec::preset("reference3").unwrap(),
        &small_config(4),
    )
    .unwrap();
    for label in [Label::Real, Label::Simulated] {
        let train: BTreeSet<&str> = r.train_origins(label).map(|o| o.asset_id.as_str()).collect();
        let test: BTreeSet<&str> = r.test_origins(label).map(|o| o.asset_id.as_str()).collect();
        assert!(!train.is_empty() && !test.is_empty());
        assert!(train.is_disjoint(&test), "{label}: {train:?} vs {test:?}");
    }
    assert_eq!(r.bundle.train.len(), 400);
    assert_eq!(r.bundle.test.len(), 400);
}

#[test]
fn compare_cells_share_real_test_segments() {
    let real = gaussian_panel(8, 700, 5, |_| 0.01);
    let dets = [constant(), DetectorSpec::preset("reference3").unwrap()];
    let report = compare_methods(
        &real,
        &[GeneratorSpec::Gbm, GeneratorSpec::Cev],
        &dets,
        &small_config(6),
    )
    .unwrap();
    let hashes: BTreeSet<u64> = report
        .cells
        .iter()
        .flatten()
        .map(|c| c.as_ref().unwrap().real_test_hash)
        .collect();
    assert_eq!(hashes.len(), 1);
    assert_eq!(report.auc(0, 0), Some(0.5));
    assert_eq!(report.auc(1, 0), Some(0.5));
}

#[test]
fn compare_keeps_going_after_a_failed_fit() {
    // Fewer than the GARCH minimum of observations per asset.
    let real = gaussian_panel(6, 400, 7, |_| 0.01);
    let report = compare_methods(
        &real,
        &[GeneratorSpec::Gjr, GeneratorSpec::Gbm],
        &[constant()],
        &small_config(8),
    )
    .unwrap();
    assert!(report.cells[0][0].is_err());
    assert_eq!(report.auc(1, 0), Some(0.5));
}

#[test]
fn period_regime_shift_is_detected() {
    // Volatility triples halfway through the calendar.
    let real = gaussian_panel(10, 1200, 9, |t| if t < 600 { 0.005 } else { 0.015 });
    let r = run_control_experiment(
        &real,
        1,
        &DetectorSpec::preset("reference2").unwrap(),
        &small_config(10),
    )
    .unwrap();
    assert!(r.auc > 0.7, "auc {}", r.auc);
    assert!(r.bundle.train.iter().all(|(_, s)| s.origin.asset_id.starts_with('R')));
}

#[test]
fn replayed_real_data_is_indistinguishable() {
    let pool = gaussian_panel(20, 800, 11, |_| 0.01);
    let real = pool.select_assets(&(0..10).collect::<Vec<_>>()).unwrap();
    let twin = pool.select_assets(&(10..20).collect::<Vec<_>>()).unwrap();
    let model = GeneratorModel::replay("replay", twin);
    let cfg = ChallengeConfig {
        segments_per_class: 400,
        ..small_config(12)
    };
    let r = run_challenge_fitted(&real, &model, &DetectorSpec::preset("reference3").unwrap(), &cfg).unwrap();
    // Four standard errors of the null AUC at 400 + 400 test segments.
    assert!((r.auc - 0.5).abs() < 0.082, "auc {}", r.auc);
}

#[test]
fn swapping_class_labels_complements_auc() {
    let real = gaussian_panel(8, 800, 13, |_| 0.01);
    let det = DetectorSpec::preset("reference2").unwrap();
    let r = run_challenge(&real, &GeneratorSpec::Gbm, &det, &small_config(14)).unwrap();
    let flipped: Vec<u8> = r.evaluation.test_labels.iter().map(|y| 1 - y).collect();
    let other = realism_core::eval::roc_auc(&r.evaluation.scores, &flipped).unwrap();
    assert_eq!(r.auc + other.auc, 1.0);
}

#[test]
fn every_generator_is_deterministic_given_seed() {
    let real = gaussian_panel(4, 1200, 15, |t| 0.01 * (1.0 + 0.5 * ((t / 100) % 2) as f64));
    let specs = [
        GeneratorSpec::M1 {
            window: 20,
            trend: TrendConfig {
                min_move: 0.03,
                min_length: 15,
            },
        },
        GeneratorSpec::M2 {
            trend: TrendConfig {
                min_move: 0.03,
                min_length: 15,
            },
        },
        GeneratorSpec::Gbm,
        GeneratorSpec::Cev,
    ];
    for spec in specs {
        let model = spec.fit(&real).unwrap();
        let a = model.simulate(5, 300, 77).unwrap();
        let b = model.simulate(5, 300, 77).unwrap();
        let c = model.simulate(5, 300, 78).unwrap();
        assert_eq!(a, b, "{}", spec.name());
        assert_ne!(a, c, "{}", spec.name());
    }
}

#[test]
fn asymmetric_garch_paths_cluster_volatility() {
    for (kind, alpha, beta, leverage, omega) in [
        (GarchKind::Gjr, 0.08, 0.88, 0.06, 2e-6),
        (GarchKind::Egarch, 0.15, 0.97, -0.08, -0.25),
    ] {
        let p = GarchParams {
            kind,
            mu: 0.0,
            omega,
            alpha,
            beta,
            leverage,
            nu: 8.0,
        };
        let r = simulate_returns(&p, 20_000, 21).unwrap();
        let abs: Vec<f64> = r.iter().map(|v| v.abs()).collect();
        let rho_abs = acf(&abs, 5).unwrap();
        let rho = acf(&r, 5).unwrap();
        // 0.03 is about four standard errors for an uncorrelated series.
        assert!(rho_abs[1..].iter().all(|v| *v > 0.03), "{kind:?}: {rho_abs:?}");
        assert!(rho[1..].iter().all(|v| v.abs() < 0.03), "{kind:?}: {rho:?}");
    }
}

#[test]
fn pca_enlargement_draws_loadings_from_the_fitted_distribution() {
    let mut rng = rng_from_seed(31);
    let (n, t) = (6, 400);
    let data: Vec<f64> = (0..n * t).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let basis = PcaBasis::fit(&Matrix::from_vec(n, t, data).unwrap()).unwrap();
    let extra = 4000;
    let enlarged = pca_enlarge(&basis, n + extra, 32).unwrap();
    for i in 0..n {
        assert_eq!(enlarged.row(i), basis.transform.row(i));
    }
    for j in 0..n {
        let new: Vec<f64> = (n..n + extra).map(|i| enlarged.get(i, j)).collect();
        let mean = new.iter().sum::<f64>() / extra as f64;
        let se = (basis.row_covariance.get(j, j) / extra as f64).sqrt();
        assert!((mean - basis.row_mean[j]).abs() <= 3.0 * se + 1e-12, "column {j}");
    }
}
