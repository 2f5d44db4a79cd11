use alloc::vec::Vec;

#[allow(unused_imports)] // inherent float methods need std on older toolchains
use num_traits::Float;

use super::{FeatureFamily, FeatureVector};
use crate::{Error, Result};

pub const SORTED_SEGMENT_LENGTH: usize = 260;

fn sorted_block(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

/// Five ascending blocks: returns, consecutive products, consecutive
/// differences, rolling std over 2 and over 3 values.
pub fn sorted_features(segment: &[f64]) -> Result<FeatureVector> {
    if segment.len() != SORTED_SEGMENT_LENGTH {
        return Err(Error::input(alloc::format!(
            "sorted features need {SORTED_SEGMENT_LENGTH} values, got {}",
            segment.len()
        )));
    }
    let pairs = || segment.windows(2);
    let mut out = Vec::with_capacity(FeatureFamily::Sorted.dim());
    out.extend(sorted_block(segment.to_vec()));
    out.extend(sorted_block(pairs().map(|w| w[0] * w[1]).collect()));
    out.extend(sorted_block(pairs().map(|w| w[1] - w[0]).collect()));
    out.extend(sorted_block(
        pairs().map(|w| crate::stats::sample_variance(w).sqrt()).collect(),
    ));
    out.extend(sorted_block(
        segment
            .windows(3)
            .map(|w| crate::stats::sample_variance(w).sqrt())
            .collect(),
    ));
    Ok(FeatureVector::sanitized(FeatureFamily::Sorted, out, false))
}
