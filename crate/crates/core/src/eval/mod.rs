//! ROC-AUC scoring and the challenge protocols built on it.

mod challenge;
mod roc;

pub use challenge::{
    compare_methods, evaluate, prepare_real, prepare_simulated, run_challenge, run_challenge_fitted,
    run_control_experiment, run_prepared, segments_hash, ChallengeBundle, ChallengeConfig, ChallengeResult,
    CompareReport, Evaluation, RealSide, DEFAULT_SEGMENTS_PER_CLASS,
};
pub use roc::{roc_auc, trapezoid_area, RocResult};
