use alloc::vec::Vec;

#[allow(unused_imports)] // inherent float methods need std on older toolchains
use num_traits::Float;

use super::{FeatureFamily, FeatureVector};
use crate::{Error, Result};

pub const DEFAULT_LAGS: usize = 100;

/// Biased sample autocorrelations at lags `1..=nlags`.
pub fn acf(x: &[f64], nlags: usize) -> Result<Vec<f64>> {
    let n = x.len();
    if n <= nlags {
        return Err(Error::input(alloc::format!(
            "segment of length {n} needs more than {nlags} values"
        )));
    }
    let m = crate::stats::mean(x);
    let d: Vec<f64> = x.iter().map(|v| v - m).collect();
    let denom: f64 = d.iter().map(|v| v * v).sum();
    if crate::stats::negligible_spread((denom / n as f64).sqrt(), m) {
        return Err(Error::ZeroVariance);
    }
    Ok((1..=nlags)
        .map(|k| d[..n - k].iter().zip(&d[k..]).map(|(a, b)| a * b).sum::<f64>() / denom)
        .collect())
}

/// Zero variance yields a flagged all-zero vector.
pub fn acf_features(segment: &[f64], nlags: usize, absolute: bool) -> Result<FeatureVector> {
    let family = if absolute {
        FeatureFamily::AcfAbsolute
    } else {
        FeatureFamily::AcfReturns
    };
    let x: Vec<f64> = if absolute {
        segment.iter().map(|v| v.abs()).collect()
    } else {
        segment.to_vec()
    };
    match acf(&x, nlags) {
        Ok(v) => Ok(FeatureVector::sanitized(family, v, false)),
        Err(Error::ZeroVariance) => Ok(FeatureVector::sanitized(family, alloc::vec![0.0; nlags], true)),
        Err(e) => Err(e),
    }
}
