//! Detector feature families computed from fixed-length return segments.
//!
//! Undefined values (zero variance, empty Hurst grid, non-finite results)
//! become 0 and set the vector's `flagged` bit.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::{Error, Matrix, Result, Segment};

mod acf;
mod reoccurrence;
mod sorted;
mod statistics;

pub use acf::{acf, acf_features, DEFAULT_LAGS};
pub use reoccurrence::{binned_entropy, reoccurrence_features, DEFAULT_MAX_BINS};
pub use sorted::{sorted_features, SORTED_SEGMENT_LENGTH};
pub use statistics::{hurst_exponent, kurtosis, skewness, stats_features};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum FeatureFamily {
    /// Autocorrelations of returns, lags 1..=100.
    AcfReturns,
    /// Autocorrelations of absolute returns, lags 1..=100.
    AcfAbsolute,
    /// Eight summary statistics.
    Statistics,
    /// Sorted returns, products, differences and rolling deviations.
    Sorted,
    /// Repeated-value counts and binned entropy.
    Reoccurrence,
}

impl FeatureFamily {
    pub const ALL: [FeatureFamily; 5] = [
        FeatureFamily::AcfReturns,
        FeatureFamily::AcfAbsolute,
        FeatureFamily::Statistics,
        FeatureFamily::Sorted,
        FeatureFamily::Reoccurrence,
    ];

    pub fn dim(self) -> usize {
        match self {
            FeatureFamily::AcfReturns | FeatureFamily::AcfAbsolute => DEFAULT_LAGS,
            FeatureFamily::Statistics => 8,
            FeatureFamily::Sorted => 1295,
            FeatureFamily::Reoccurrence => 6,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureFamily::AcfReturns => "acf_returns",
            FeatureFamily::AcfAbsolute => "acf_absolute",
            FeatureFamily::Statistics => "statistics",
            FeatureFamily::Sorted => "sorted",
            FeatureFamily::Reoccurrence => "reoccurrence",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == s.trim())
    }

    pub fn extract(self, segment: &[f64]) -> Result<FeatureVector> {
        match self {
            FeatureFamily::AcfReturns => acf_features(segment, DEFAULT_LAGS, false),
            FeatureFamily::AcfAbsolute => acf_features(segment, DEFAULT_LAGS, true),
            FeatureFamily::Statistics => stats_features(segment),
            FeatureFamily::Sorted => sorted_features(segment),
            FeatureFamily::Reoccurrence => reoccurrence_features(segment),
        }
    }
}

impl core::fmt::Display for FeatureFamily {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub family: FeatureFamily,
    pub values: Vec<f64>,
    /// True when any value was replaced by the 0 sentinel.
    pub flagged: bool,
}

impl FeatureVector {
    /// Replaces non-finite values by 0, flagging the vector if any were found.
    pub(crate) fn sanitized(family: FeatureFamily, mut values: Vec<f64>, mut flagged: bool) -> Self {
        for v in values.iter_mut() {
            if !v.is_finite() {
                *v = 0.0;
                flagged = true;
            }
        }
        FeatureVector {
            family,
            values,
            flagged,
        }
    }
}

/// One feature row per segment.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub family: FeatureFamily,
    pub segment_ids: Vec<String>,
    pub values: Matrix,
    /// Binary classes (simulated = 1) when known.
    pub labels: Option<Vec<u8>>,
    pub flagged: Vec<bool>,
}

impl FeatureMatrix {
    pub fn new(
        family: FeatureFamily,
        segment_ids: Vec<String>,
        values: Matrix,
        labels: Option<Vec<u8>>,
    ) -> Result<Self> {
        let n = values.n_rows();
        if segment_ids.len() != n {
            return Err(Error::input("segment id count differs from row count"));
        }
        if labels.as_ref().is_some_and(|l| l.len() != n) {
            return Err(Error::input("label count differs from row count"));
        }
        if labels.as_ref().is_some_and(|l| l.iter().any(|&c| c > 1)) {
            return Err(Error::input("labels must be 0 or 1"));
        }
        if n > 0 && values.n_cols() != family.dim() {
            return Err(Error::input(alloc::format!(
                "{} features have {} columns, found {}",
                family,
                family.dim(),
                values.n_cols()
            )));
        }
        Ok(FeatureMatrix {
            family,
            segment_ids,
            values,
            labels,
            flagged: alloc::vec![false; n],
        })
    }

    pub fn n_rows(&self) -> usize {
        self.values.n_rows()
    }

    /// Labels are taken from the segments when every segment has one.
    pub fn extract(family: FeatureFamily, segments: &[Segment], segment_ids: Vec<String>) -> Result<Self> {
        if segment_ids.len() != segments.len() {
            return Err(Error::input("segment id count differs from segment count"));
        }
        let mut data = Vec::with_capacity(segments.len() * family.dim());
        let mut flagged = Vec::with_capacity(segments.len());
        for s in segments {
            let v = family.extract(&s.values)?;
            data.extend_from_slice(&v.values);
            flagged.push(v.flagged);
        }
        let n_flagged = flagged.iter().filter(|&&f| f).count();
        if n_flagged > 0 {
            log::warn!(
                "{family}: {n_flagged} of {} vectors contain sentinel zeros",
                segments.len()
            );
        }
        let labels = segments
            .iter()
            .map(|s| s.label.map(|l| l.class()))
            .collect::<Option<Vec<u8>>>();
        let mut m = FeatureMatrix::new(
            family,
            segment_ids,
            Matrix::from_vec(segments.len(), family.dim(), data)?,
            labels,
        )?;
        m.flagged = flagged;
        Ok(m)
    }

    /// Ids `0..n` as strings.
    pub fn default_ids(n: usize) -> Vec<String> {
        (0..n).map(|i| i.to_string()).collect()
    }
}
