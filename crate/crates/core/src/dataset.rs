//! Segment extraction, panel partitioning and duplicate-breaking noise.

use alloc::vec::Vec;
use core::ops::Range;

#[allow(unused_imports)] // inherent float methods need std on older toolchains
use num_traits::Float;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::rng::rng_from_seed;
use crate::{Error, Panel, Result, Segment};

pub const DEFAULT_SEGMENT_LENGTH: usize = 260;
pub const DEFAULT_NOISE_AMPLITUDE: f64 = 1e-13;
pub const NOISE_RETRY_CAP: usize = 100;

/// What to draw from a panel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentQuery {
    pub length: usize,
    pub count: usize,
    /// Asset row indices eligible for sampling; all assets when `None`.
    pub assets: Option<Vec<usize>>,
    /// Step range segments must lie within; the whole panel when `None`.
    pub period: Option<Range<usize>>,
}

impl SegmentQuery {
    pub fn new(length: usize, count: usize) -> Self {
        SegmentQuery {
            length,
            count,
            assets: None,
            period: None,
        }
    }
}

/// Draws `count` segments uniformly over (asset, start) pairs, with
/// replacement. Origins carry the start index within `panel`.
pub fn extract_segments(panel: &Panel, query: &SegmentQuery, seed: u64) -> Result<Vec<Segment>> {
    if query.count == 0 {
        return Err(Error::param("count", "must be at least 1"));
    }
    if query.length == 0 {
        return Err(Error::param("length", "must be at least 1"));
    }
    let period = query.period.clone().unwrap_or(0..panel.n_steps());
    if period.end > panel.n_steps() || period.start > period.end {
        return Err(Error::param("period", "outside the panel"));
    }
    let assets: Vec<usize> = match &query.assets {
        Some(a) => {
            if a.iter().any(|&i| i >= panel.n_assets()) {
                return Err(Error::param("assets", "index outside the panel"));
            }
            a.clone()
        }
        None => (0..panel.n_assets()).collect(),
    };
    let span = period.end - period.start;
    if assets.is_empty() || span < query.length {
        return Err(Error::EmptyDomain { length: query.length });
    }
    let n_starts = span - query.length + 1;
    let total = assets.len() * n_starts;
    let mut rng = rng_from_seed(seed);
    let segments = (0..query.count)
        .map(|_| {
            let k = rng.random_range(0..total);
            let asset = assets[k / n_starts];
            let start = period.start + k % n_starts;
            Segment::new(
                panel.row(asset)[start..start + query.length].to_vec(),
                &panel.asset_ids()[asset],
                start,
            )
        })
        .collect();
    Ok(segments)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum PartitionMode {
    ByAsset,
    ByPeriod,
    /// Split assets into two classes, then each class into an earlier and a
    /// later period.
    ByAssetThenPeriod,
    /// Split the calendar into two classes, then each class into two asset
    /// subsets.
    ByPeriodThenAsset,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PartitionSpec {
    pub mode: PartitionMode,
    pub split_fraction: f64,
    pub seed: u64,
}

/// One side of a partition. `halves` holds the nested (first, second)
/// split for the two-level modes.
#[derive(Debug, Clone, PartialEq)]
pub struct Subset {
    pub panel: Panel,
    pub halves: Option<(Panel, Panel)>,
}

pub fn partition(panel: &Panel, spec: &PartitionSpec) -> Result<(Subset, Subset)> {
    if !(spec.split_fraction > 0.0 && spec.split_fraction < 1.0) {
        return Err(Error::param("split_fraction", "must lie in (0, 1)"));
    }
    let whole = |p: Panel| Subset { panel: p, halves: None };
    match spec.mode {
        PartitionMode::ByAsset => {
            let (a, b) = split_assets(panel, spec.split_fraction, spec.seed)?;
            Ok((whole(a), whole(b)))
        }
        PartitionMode::ByPeriod => {
            let (a, b) = split_period(panel, spec.split_fraction)?;
            Ok((whole(a), whole(b)))
        }
        PartitionMode::ByAssetThenPeriod => {
            let (a, b) = split_assets(panel, spec.split_fraction, spec.seed)?;
            let ha = split_period(&a, spec.split_fraction)?;
            let hb = split_period(&b, spec.split_fraction)?;
            Ok((
                Subset {
                    panel: a,
                    halves: Some(ha),
                },
                Subset {
                    panel: b,
                    halves: Some(hb),
                },
            ))
        }
        PartitionMode::ByPeriodThenAsset => {
            let (a, b) = split_period(panel, spec.split_fraction)?;
            let ha = split_assets(&a, spec.split_fraction, crate::rng::derive_seed(spec.seed, "nested-a"))?;
            let hb = split_assets(&b, spec.split_fraction, crate::rng::derive_seed(spec.seed, "nested-b"))?;
            Ok((
                Subset {
                    panel: a,
                    halves: Some(ha),
                },
                Subset {
                    panel: b,
                    halves: Some(hb),
                },
            ))
        }
    }
}

/// Random asset split; the first side receives `round(n * fraction)`
/// assets (at least one per side). Each side keeps the panel's row order.
pub fn split_assets(panel: &Panel, fraction: f64, seed: u64) -> Result<(Panel, Panel)> {
    let n = panel.n_assets();
    if n < 2 {
        return Err(Error::DegenerateSplit);
    }
    let k = split_point(n, fraction)?;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng_from_seed(seed));
    let mut first = idx[..k].to_vec();
    let mut second = idx[k..].to_vec();
    first.sort_unstable();
    second.sort_unstable();
    Ok((panel.select_assets(&first)?, panel.select_assets(&second)?))
}

/// Contiguous calendar split at `round(n_steps * fraction)`.
pub fn split_period(panel: &Panel, fraction: f64) -> Result<(Panel, Panel)> {
    let n = panel.n_steps();
    if n < 2 {
        return Err(Error::DegenerateSplit);
    }
    let k = split_point(n, fraction)?;
    Ok((panel.slice_steps(0..k)?, panel.slice_steps(k..n)?))
}

fn split_point(n: usize, fraction: f64) -> Result<usize> {
    let k = (n as f64 * fraction).round() as usize;
    if k == 0 || k >= n {
        return Err(Error::DegenerateSplit);
    }
    Ok(k)
}

/// Adds uniform noise in `[-amplitude, amplitude]` to every cell, redrawing
/// the noise of colliding cells until no two cells share an exact value.
pub fn inject_noise(panel: &Panel, amplitude: f64, seed: u64) -> Result<Panel> {
    if !(amplitude > 0.0 && amplitude.is_finite()) {
        return Err(Error::param("amplitude", "must be positive"));
    }
    let original = panel.values();
    let mut rng = rng_from_seed(seed);
    let draw = |x: f64, rng: &mut crate::rng::SimRng| loop {
        let y = x + rng.random_range(-amplitude..=amplitude);
        // rounding of x + noise may overshoot the bound by an ulp
        if (y - x).abs() <= amplitude {
            return y;
        }
    };
    let mut values: Vec<f64> = original.iter().map(|&x| draw(x, &mut rng)).collect();
    for _ in 0..NOISE_RETRY_CAP {
        let colliding = duplicate_cells(&values);
        if colliding.is_empty() {
            return panel.with_values(values);
        }
        for i in colliding {
            values[i] = draw(original[i], &mut rng);
        }
    }
    if duplicate_cells(&values).is_empty() {
        return panel.with_values(values);
    }
    Err(Error::DuplicateUnresolvable {
        retries: NOISE_RETRY_CAP,
    })
}

/// Indices of cells whose value already occurred at a lower-ranked cell;
/// the first member of every equal group is left out.
fn duplicate_cells(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut out = Vec::new();
    for w in order.windows(2) {
        if values[w[0]] == values[w[1]] {
            out.push(w[1]);
        }
    }
    out
}
