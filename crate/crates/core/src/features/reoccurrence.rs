#[allow(unused_imports)] // inherent float methods need std on older toolchains
use num_traits::Float;

use super::{FeatureFamily, FeatureVector};
use crate::{Error, Result};

pub const DEFAULT_MAX_BINS: usize = 10;

/// Shannon entropy (natural log) of an equal-width histogram over
/// `[min, max]`; the top edge belongs to the last bin.
pub fn binned_entropy(x: &[f64], max_bins: usize) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::input("binned entropy of an empty segment"));
    }
    if max_bins == 0 {
        return Err(Error::param("max_bins", "must be at least 1"));
    }
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Ok(0.0);
    }
    let width = (hi - lo) / max_bins as f64;
    let mut counts = alloc::vec![0usize; max_bins];
    for v in x {
        let b = (((v - lo) / width) as usize).min(max_bins - 1);
        counts[b] += 1;
    }
    let n = x.len() as f64;
    Ok(-counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            p * p.ln()
        })
        .sum::<f64>())
}

/// `[share of repeated positions, sum over repeated positions, share of
/// repeated distinct values, sum of repeated distinct values, binned
/// entropy, distinct count / length]`.
pub fn reoccurrence_features(segment: &[f64]) -> Result<FeatureVector> {
    if segment.is_empty() {
        return Err(Error::input("reoccurrence features of an empty segment"));
    }
    let mut sorted = segment.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (mut distinct, mut repeated_values, mut repeated_points) = (0usize, 0usize, 0usize);
    let (mut sum_values, mut sum_points) = (0.0, 0.0);
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let mult = j - i;
        distinct += 1;
        if mult > 1 {
            repeated_values += 1;
            repeated_points += mult;
            sum_values += sorted[i];
            sum_points += sorted[i] * mult as f64;
        }
        i = j;
    }
    let n = segment.len() as f64;
    let values = alloc::vec![
        repeated_points as f64 / n,
        sum_points,
        repeated_values as f64 / distinct as f64,
        sum_values,
        binned_entropy(segment, DEFAULT_MAX_BINS)?,
        distinct as f64 / n,
    ];
    Ok(FeatureVector::sanitized(FeatureFamily::Reoccurrence, values, false))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use alloc::vec::Vec;
    use rand::Rng;

    /// Distinct values with more than one occurrence, in ascending order.
    fn repeated_values(x: &[f64]) -> Vec<f64> {
        let mut s = x.to_vec();
        s.sort_by(f64::total_cmp);
        let mut out: Vec<f64> = Vec::new();
        for w in s.windows(2) {
            if w[0] == w[1] && out.last() != Some(&w[0]) {
                out.push(w[0]);
            }
        }
        out
    }

    #[test]
    fn worked_example() {
        let x = [1.0, 4.0, 0.5, 1.0, 2.9, 1.8, 4.0];
        let v = reoccurrence_features(&x).unwrap().values;
        assert_eq!(v[0], 4.0 / 7.0);
        assert_eq!(v[1], 10.0);
        assert_eq!(v[2], 2.0 / 5.0);
        assert_eq!(v[3], 5.0);
        assert_eq!(v[5], 5.0 / 7.0);
    }

    #[test]
    fn matches_multiplicity_oracle() {
        let mut rng = rng_from_seed(4);
        let x: Vec<f64> = (0..200).map(|_| rng.random_range(0..40) as f64 * 0.25).collect();
        let v = reoccurrence_features(&x).unwrap().values;
        let mult = |a: f64| x.iter().filter(|&&b| b == a).count();
        let points: Vec<f64> = x.iter().copied().filter(|&a| mult(a) > 1).collect();
        let reps = repeated_values(&x);
        let mut distinct = x.clone();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        assert_eq!(v[0], points.len() as f64 / 200.0);
        assert!((v[1] - points.iter().sum::<f64>()).abs() < 1e-9);
        assert_eq!(v[2], reps.len() as f64 / distinct.len() as f64);
        assert!((v[3] - reps.iter().sum::<f64>()).abs() < 1e-9);
        assert_eq!(v[5], distinct.len() as f64 / 200.0);
    }

    #[test]
    fn all_distinct() {
        let x: Vec<f64> = (0..50).map(|t| t as f64 * 0.1).collect();
        let v = reoccurrence_features(&x).unwrap().values;
        assert_eq!([v[0], v[1], v[2], v[3], v[5]], [0.0, 0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn entropy_cases() {
        assert_eq!(binned_entropy(&[3.0; 9], 10).unwrap(), 0.0);
        let uniform: Vec<f64> = (0..100).map(|i| (i / 10) as f64 + 0.5).collect();
        assert!((binned_entropy(&uniform, 10).unwrap() - 10f64.ln()).abs() < 1e-12);
        let mut rng = rng_from_seed(5);
        let x: Vec<f64> = (0..300).map(|_| rng.random::<f64>().powi(3)).collect();
        let (lo, hi) = (
            x.iter().cloned().fold(1.0, f64::min),
            x.iter().cloned().fold(0.0, f64::max),
        );
        let mut counts = [0.0; 10];
        for v in &x {
            let mut b = 0;
            while b < 9 && *v >= lo + (b + 1) as f64 * (hi - lo) / 10.0 {
                b += 1;
            }
            counts[b] += 1.0;
        }
        let oracle: f64 = -counts
            .iter()
            .filter(|&&c| c > 0.0)
            .map(|c| c / 300.0 * (c / 300.0f64).ln())
            .sum::<f64>();
        assert!((binned_entropy(&x, 10).unwrap() - oracle).abs() < 1e-12);
    }
}
