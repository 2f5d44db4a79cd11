use alloc::vec::Vec;

#[allow(unused_imports)] // inherent float methods need std on older toolchains
use num_traits::Float;

use super::{FeatureFamily, FeatureVector};
use crate::stats::{linear_fit, mean, median, std_dev};
use crate::{Error, Result};

pub const MIN_LENGTH: usize = 32;
const SMALLEST_WINDOW: usize = 16;
const TAIL_SIGMAS: f64 = 2.0;

fn central_moment(x: &[f64], m: f64, k: i32) -> f64 {
    x.iter().map(|v| (v - m).powi(k)).sum::<f64>() / x.len() as f64
}

/// Pearson kurtosis `m4 / m2²` (3 for a normal).
pub fn kurtosis(x: &[f64]) -> f64 {
    let m = mean(x);
    central_moment(x, m, 4) / central_moment(x, m, 2).powi(2)
}

pub fn skewness(x: &[f64]) -> f64 {
    let m = mean(x);
    central_moment(x, m, 3) / central_moment(x, m, 2).powf(1.5)
}

/// Rescaled-range estimate: slope of `ln(R/S)` against `ln(window)` over
/// windows 16, 32, ... up to half the length, each averaged over
/// non-overlapping blocks. With fewer than two window sizes the full
/// length is added.
pub fn hurst_exponent(x: &[f64]) -> Result<f64> {
    let n = x.len();
    if n < MIN_LENGTH {
        return Err(Error::input(alloc::format!(
            "Hurst estimate needs {MIN_LENGTH} values, got {n}"
        )));
    }
    let mut windows = Vec::new();
    let mut w = SMALLEST_WINDOW;
    while w <= n / 2 {
        windows.push(w);
        w *= 2;
    }
    if windows.len() < 2 {
        windows.push(n);
    }
    let (mut lx, mut ly) = (Vec::new(), Vec::new());
    for &w in &windows {
        let mut total = 0.0;
        let mut count = 0;
        for block in x.chunks_exact(w) {
            if let Some(rs) = rescaled_range(block) {
                total += rs;
                count += 1;
            }
        }
        if count > 0 && total > 0.0 {
            lx.push((w as f64).ln());
            ly.push((total / count as f64).ln());
        }
    }
    if lx.len() < 2 {
        return Err(Error::ZeroVariance);
    }
    linear_fit(&lx, &ly)
        .map(|(slope, _)| slope)
        .ok_or_else(|| Error::Numerical("degenerate Hurst regression".into()))
}

fn rescaled_range(block: &[f64]) -> Option<f64> {
    let m = mean(block);
    let s = central_moment(block, m, 2).sqrt();
    if crate::stats::negligible_spread(s, m) {
        return None;
    }
    let (mut acc, mut lo, mut hi) = (0.0, f64::INFINITY, f64::NEG_INFINITY);
    for v in block {
        acc += v - m;
        lo = lo.min(acc);
        hi = hi.max(acc);
    }
    Some((hi - lo) / s)
}

/// `[mean, std, median, kurtosis, skewness, Hurst, Sharpe, tail fraction]`,
/// the tail fraction being the share of `|r - mean| > 2 std`.
pub fn stats_features(segment: &[f64]) -> Result<FeatureVector> {
    if segment.len() < MIN_LENGTH {
        return Err(Error::input(alloc::format!(
            "statistics need {MIN_LENGTH} values, got {}",
            segment.len()
        )));
    }
    let m = mean(segment);
    let mut sd = std_dev(segment);
    let mut flagged = false;
    let (kurt, skew, sharpe, tail) = if !crate::stats::negligible_spread(sd, m) {
        let cut = TAIL_SIGMAS * sd;
        let tail = segment.iter().filter(|v| (*v - m).abs() > cut).count() as f64 / segment.len() as f64;
        (kurtosis(segment), skewness(segment), m / sd, tail)
    } else {
        flagged = true;
        sd = 0.0;
        (0.0, 0.0, 0.0, 0.0)
    };
    let hurst = hurst_exponent(segment).unwrap_or_else(|_| {
        flagged = true;
        0.0
    });
    Ok(FeatureVector::sanitized(
        FeatureFamily::Statistics,
        alloc::vec![m, sd, median(segment), kurt, skew, hurst, sharpe, tail],
        flagged,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::garch::{simulate_returns, GarchKind, GarchParams};
    use crate::rng::rng_from_seed;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn normals(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rng_from_seed(seed);
        (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
    }

    #[test]
    fn constant_segment_uses_sentinels() {
        let v = stats_features(&[0.02; 260]).unwrap();
        assert!(v.flagged);
        assert!((v.values[0] - 0.02).abs() < 1e-15);
        assert_eq!(v.values[1], 0.0);
        assert_eq!(&v.values[3..], &[0.0; 5]);
    }

    #[test]
    fn normal_sample_moments() {
        let x = normals(100_000, 1);
        let v = stats_features(&x).unwrap().values;
        assert!((v[3] - 3.0).abs() < 0.1, "kurtosis {}", v[3]);
        assert!((v[5] - 0.5).abs() < 0.05, "hurst {}", v[5]);
        // two-sided 2-sigma tail mass of a normal is 0.0455
        assert!((v[7] - 0.0455).abs() < 0.005);
    }

    #[test]
    fn steady_gains_have_large_sharpe() {
        let noise = normals(260, 2);
        let x: Vec<f64> = noise.iter().map(|z| 0.01 + 1e-6 * z).collect();
        assert!(stats_features(&x).unwrap().values[6] > 10.0);
    }

    #[test]
    fn hurst_bands() {
        let white = normals(4096, 3);
        let h = hurst_exponent(&white).unwrap();
        assert!((h - 0.5).abs() < 0.1, "white {h}");

        let z = normals(4096, 4);
        let mut ar = Vec::with_capacity(z.len());
        let mut prev = 0.0;
        for e in z {
            prev = 0.9 * prev + e;
            ar.push(prev);
        }
        assert!(hurst_exponent(&ar).unwrap() > 0.6);

        let alt: Vec<f64> = normals(4096, 5)
            .iter()
            .enumerate()
            .map(|(t, e)| if t % 2 == 0 { 1.0 } else { -1.0 } + 0.05 * e)
            .collect();
        assert!(hurst_exponent(&alt).unwrap() < 0.4);
    }

    #[test]
    fn short_series_fall_back_to_full_window() {
        let x = normals(40, 6);
        assert!(hurst_exponent(&x).unwrap().is_finite());
        assert!(hurst_exponent(&x[..31]).is_err());
        assert!(hurst_exponent(&[1.0; 64]).is_err());
    }

    #[test]
    fn clustered_returns_are_heavy_tailed() {
        let p = GarchParams {
            kind: GarchKind::Gjr,
            mu: 0.0,
            omega: 1e-6,
            alpha: 0.1,
            beta: 0.85,
            leverage: 0.08,
            nu: 5.0,
        };
        let r = simulate_returns(&p, 50_000, 7).unwrap();
        assert!(kurtosis(&r) > 4.0);
    }
}
