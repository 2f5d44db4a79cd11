//! Property tests over randomly generated inputs.

use proptest::prelude::*;
use realism_core::dataset::{inject_noise, partition, PartitionMode, PartitionSpec};
use realism_core::eval::roc_auc;
use realism_core::features::{reoccurrence_features, sorted_features, SORTED_SEGMENT_LENGTH};
use realism_core::learn::{gboost_train, knn_train, GBoostConfig, KnnConfig};
use realism_core::linalg::{psd_factor, sample_covariance};
use realism_core::series::{compound_prices, simple_returns};
use realism_core::trends::segment_trends;
use realism_core::{Matrix, Panel, ReturnSeries};

/// Scores on a coarse grid so ties are common, with both classes present.
fn scored_labels() -> impl Strategy<Value = (Vec<f64>, Vec<u8>)> {
    (2usize..120).prop_flat_map(|n| {
        (
            prop::collection::vec((0u8..20).prop_map(|k| f64::from(k) / 20.0), n),
            prop::collection::vec(0u8..2, n),
        )
            .prop_map(|(s, mut y)| {
                y[0] = 0;
                y[1] = 1;
                (s, y)
            })
    })
}

fn pairwise_auc(s: &[f64], y: &[u8]) -> f64 {
    let (mut num, mut pairs) = (0.0, 0.0);
    for i in 0..s.len() {
        for j in 0..s.len() {
            if y[i] == 1 && y[j] == 0 {
                pairs += 1.0;
                if s[i] > s[j] {
                    num += 1.0;
                } else if s[i] == s[j] {
                    num += 0.5;
                }
            }
        }
    }
    num / pairs
}

fn return_rows(assets: usize, steps: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-0.05f64..0.05, steps), assets)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn auc_matches_pairwise_count((s, y) in scored_labels()) {
        let auc = roc_auc(&s, &y).unwrap().auc;
        prop_assert!((auc - pairwise_auc(&s, &y)).abs() <= 1e-12);
    }

    #[test]
    fn flipping_labels_complements_auc((s, y) in scored_labels()) {
        let flipped: Vec<u8> = y.iter().map(|v| 1 - v).collect();
        let sum = roc_auc(&s, &y).unwrap().auc + roc_auc(&s, &flipped).unwrap().auc;
        prop_assert_eq!(sum, 1.0);
    }

    #[test]
    fn auc_ignores_increasing_transforms((s, y) in scored_labels()) {
        let t: Vec<f64> = s.iter().map(|v| (3.0 * v).exp() - 7.0).collect();
        prop_assert_eq!(roc_auc(&s, &y).unwrap().auc, roc_auc(&t, &y).unwrap().auc);
    }

    #[test]
    fn roc_points_are_monotone((s, y) in scored_labels()) {
        let roc = roc_auc(&s, &y).unwrap();
        prop_assert_eq!(roc.points.first().copied(), Some((0.0, 0.0)));
        prop_assert_eq!(roc.points.last().copied(), Some((1.0, 1.0)));
        for w in roc.points.windows(2) {
            prop_assert!(w[1].0 >= w[0].0 && w[1].1 >= w[0].1);
        }
    }

    #[test]
    fn prices_round_trip(p in prop::collection::vec(0.01f64..100.0, 2..200)) {
        let back = compound_prices(&simple_returns(&p).unwrap(), p[0]).unwrap();
        for (a, b) in p.iter().zip(&back) {
            prop_assert!((a - b).abs() <= 1e-12 * a.abs());
        }
    }

    #[test]
    fn reoccurrence_is_permutation_invariant(
        x in prop::collection::vec((-5i32..5).prop_map(|k| f64::from(k) * 1e-3), 5..80),
        seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        let mut shuffled = x.clone();
        shuffled.shuffle(&mut realism_core::rng::rng_from_seed(seed));
        let a = reoccurrence_features(&x).unwrap().values;
        let b = reoccurrence_features(&shuffled).unwrap().values;
        for (u, v) in a.iter().zip(&b) {
            prop_assert!((u - v).abs() <= 1e-12 * (1.0 + u.abs()));
        }
    }

    #[test]
    fn noise_removes_duplicates_within_bound(
        cells in prop::collection::vec((-3i32..3).prop_map(|k| f64::from(k) * 1e-4), 40),
        seed in any::<u64>(),
    ) {
        let panel = Panel::synthetic("A", cells.chunks(20).map(<[f64]>::to_vec).collect()).unwrap();
        let noised = inject_noise(&panel, 1e-13, seed).unwrap();
        let mut seen: Vec<f64> = noised.values().to_vec();
        for (a, b) in panel.values().iter().zip(&seen) {
            prop_assert!((a - b).abs() <= 1e-13);
        }
        for row in noised.rows() {
            let f = reoccurrence_features(row).unwrap().values;
            prop_assert_eq!([f[0], f[1], f[2], f[3], f[5]], [0.0, 0.0, 0.0, 0.0, 1.0]);
        }
        seen.sort_by(f64::total_cmp);
        prop_assert!(seen.windows(2).all(|w| w[0] != w[1]));
    }

    #[test]
    fn sorted_feature_blocks_are_nondecreasing(x in prop::collection::vec(-0.1f64..0.1, SORTED_SEGMENT_LENGTH)) {
        let f = sorted_features(&x).unwrap().values;
        prop_assert_eq!(f.len(), 1295);
        for block in [0..260, 260..519, 519..778, 778..1037, 1037..1295] {
            prop_assert!(f[block].windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn covariance_factor_reproduces_covariance(rows in return_rows(12, 6)) {
        let cov = sample_covariance(&rows);
        let a = psd_factor(&cov, 1e-12).unwrap();
        let aat = a.matmul(&a.transpose()).unwrap();
        prop_assert!(aat.max_abs_diff(&cov) <= 1e-8);
    }

    #[test]
    fn partitions_are_disjoint_and_exhaustive(rows in return_rows(6, 30), seed in any::<u64>(), by_asset in any::<bool>()) {
        let panel = Panel::synthetic("A", rows).unwrap();
        let mode = if by_asset { PartitionMode::ByAsset } else { PartitionMode::ByPeriod };
        let (a, b) = partition(&panel, &PartitionSpec { mode, split_fraction: 0.5, seed }).unwrap();
        if by_asset {
            prop_assert_eq!(a.panel.n_assets() + b.panel.n_assets(), 6);
            prop_assert!(a.panel.asset_ids().iter().all(|id| b.panel.index_of(id).is_none()));
        } else {
            prop_assert_eq!(a.panel.n_steps() + b.panel.n_steps(), 30);
            prop_assert!(a.panel.timestamps().iter().all(|t| !b.panel.timestamps().contains(t)));
        }
    }

    #[test]
    fn trends_alternate_and_tile(r in prop::collection::vec(-0.03f64..0.03, 50..400)) {
        let seg = segment_trends(&ReturnSeries::new("idx", r.clone()).unwrap(), 0.02, 3).unwrap();
        for w in seg.intervals.windows(2) {
            prop_assert_ne!(w[0].direction, w[1].direction);
            prop_assert_eq!(w[0].end, w[1].start);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn boosting_loss_never_rises(
        x in prop::collection::vec(-1.0f64..1.0, 120),
        y in prop::collection::vec(0u8..2, 60),
        seed in any::<u64>(),
    ) {
        let mut y = y;
        y[0] = 0;
        y[1] = 1;
        let m = Matrix::from_vec(60, 2, x).unwrap();
        let cfg = GBoostConfig { n_rounds: 30, patience: 30, ..GBoostConfig::default() };
        let model = gboost_train(&m, &y, &cfg, seed).unwrap();
        prop_assert!(model.train_loss.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn knn_scores_are_vote_fractions(
        x in prop::collection::vec(0.1f64..1.0, 90),
        y in prop::collection::vec(0u8..2, 30),
        q in prop::collection::vec(-1.0f64..1.0, 30),
        seed in any::<u64>(),
    ) {
        let mut y = y;
        y[0] = 0;
        y[1] = 1;
        let model = knn_train(&Matrix::from_vec(30, 3, x).unwrap(), &y, &KnnConfig::default(), seed).unwrap();
        let queries: Vec<f64> = q.iter().map(|v| if *v == 0.0 { 0.5 } else { *v }).collect();
        for s in model.score(&Matrix::from_vec(10, 3, queries).unwrap()).unwrap() {
            let k = s * 40.0;
            prop_assert!((0.0..=1.0).contains(&s));
            prop_assert!((k - k.round()).abs() < 1e-9);
        }
    }
}
