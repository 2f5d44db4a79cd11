//! Ex-post trend segmentation of the equally weighted market index.
//!
//! The index price path is split with a zig-zag filter: a trend reverses once
//! the path retraces more than `min_move` (relative) from its running extreme.
//! Intervals shorter than `min_length` are then absorbed into a neighbour.

use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)] // inherent float methods need std on older toolchains
use num_traits::Float;

use crate::series::compound_prices;
use crate::{Error, Panel, Result, ReturnSeries};

pub const DEFAULT_MIN_MOVE: f64 = 0.10;
pub const DEFAULT_MIN_LENGTH: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Direction {
    Up,
    Down,
}

impl Direction {
    pub fn opposite(self) -> Self {
        match self {
            Direction::Up => Direction::Down,
            Direction::Down => Direction::Up,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Up => "up",
            Direction::Down => "down",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "up" => Some(Direction::Up),
            "down" => Some(Direction::Down),
            _ => None,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Returns `[start, end)` of the index moving in `direction`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrendInterval {
    pub start: usize,
    pub end: usize,
    pub direction: Direction,
}

impl TrendInterval {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrendSegmentation {
    pub intervals: Vec<TrendInterval>,
    pub index: ReturnSeries,
}

impl TrendSegmentation {
    pub fn count(&self, direction: Direction) -> usize {
        self.intervals.iter().filter(|i| i.direction == direction).count()
    }
}

/// Per-step arithmetic mean of the panel's asset returns.
pub fn equal_weight_index(panel: &Panel) -> Result<ReturnSeries> {
    if panel.n_assets() == 0 || panel.n_steps() == 0 {
        return Err(Error::input("empty panel"));
    }
    let n = panel.n_assets() as f64;
    let mut index = alloc::vec![0.0; panel.n_steps()];
    for row in panel.rows() {
        for (acc, r) in index.iter_mut().zip(row) {
            *acc += r;
        }
    }
    index.iter_mut().for_each(|v| *v /= n);
    ReturnSeries::new("index", index)
}

pub fn segment_trends(index: &ReturnSeries, min_move: f64, min_length: usize) -> Result<TrendSegmentation> {
    if !(min_move > 0.0 && min_move.is_finite()) {
        return Err(Error::param("min_move", "must be positive"));
    }
    if min_length == 0 {
        return Err(Error::param("min_length", "must be at least 1"));
    }
    let n = index.len();
    if n < min_length || n == 0 {
        return Err(Error::input(alloc::format!(
            "index has {n} returns, fewer than min_length {min_length}"
        )));
    }
    let log_path: Vec<f64> = compound_prices(&index.returns, 1.0)?.iter().map(|p| p.ln()).collect();
    let mut intervals = zigzag(&log_path, (1.0 + min_move).ln(), -(1.0 - min_move.min(0.999_999)).ln());
    merge_short(&mut intervals, &log_path, min_length);
    Ok(TrendSegmentation {
        intervals,
        index: index.clone(),
    })
}

/// Zig-zag pivots on a log price path of `n + 1` points; returns intervals
/// over the `n` returns. `rise` and `fall` are the log thresholds for
/// confirming an up move from a low and a down move from a high.
fn zigzag(log_path: &[f64], rise: f64, fall: f64) -> Vec<TrendInterval> {
    let n = log_path.len() - 1;
    let mut pivots: Vec<(usize, Direction)> = Vec::new();
    let mut dir: Option<Direction> = None;
    let (mut hi, mut lo) = (0usize, 0usize);
    let mut ext = 0usize;
    for t in 1..=n {
        let p = log_path[t];
        match dir {
            None => {
                if p > log_path[hi] {
                    hi = t;
                }
                if p < log_path[lo] {
                    lo = t;
                }
                if p - log_path[lo] > rise {
                    if lo > 0 {
                        pivots.push((0, Direction::Down));
                    }
                    pivots.push((lo, Direction::Up));
                    dir = Some(Direction::Up);
                    ext = t;
                } else if log_path[hi] - p > fall {
                    if hi > 0 {
                        pivots.push((0, Direction::Up));
                    }
                    pivots.push((hi, Direction::Down));
                    dir = Some(Direction::Down);
                    ext = t;
                }
            }
            Some(Direction::Up) => {
                if p > log_path[ext] {
                    ext = t;
                } else if log_path[ext] - p > fall {
                    pivots.push((ext, Direction::Down));
                    dir = Some(Direction::Down);
                    ext = t;
                }
            }
            Some(Direction::Down) => {
                if p < log_path[ext] {
                    ext = t;
                } else if p - log_path[ext] > rise {
                    pivots.push((ext, Direction::Up));
                    dir = Some(Direction::Up);
                    ext = t;
                }
            }
        }
    }
    if pivots.is_empty() {
        let d = if log_path[n] >= log_path[0] {
            Direction::Up
        } else {
            Direction::Down
        };
        pivots.push((0, d));
    }
    let mut intervals: Vec<TrendInterval> = pivots
        .iter()
        .enumerate()
        .map(|(k, &(start, direction))| TrendInterval {
            start,
            end: pivots.get(k + 1).map_or(n, |p| p.0),
            direction,
        })
        .filter(|iv| !iv.is_empty())
        .collect();
    normalise(&mut intervals, log_path);
    intervals
}

fn change(iv: &TrendInterval, log_path: &[f64]) -> f64 {
    log_path[iv.end] - log_path[iv.start]
}

/// Makes every direction agree with the sign of its price change (zero
/// change keeps the label) and fuses equal-direction neighbours.
fn normalise(intervals: &mut Vec<TrendInterval>, log_path: &[f64]) {
    for iv in intervals.iter_mut() {
        let c = change(iv, log_path);
        if c > 0.0 {
            iv.direction = Direction::Up;
        } else if c < 0.0 {
            iv.direction = Direction::Down;
        }
    }
    let mut fused: Vec<TrendInterval> = Vec::with_capacity(intervals.len());
    for iv in intervals.drain(..) {
        match fused.last_mut() {
            Some(last) if last.direction == iv.direction => last.end = iv.end,
            _ => fused.push(iv),
        }
    }
    *intervals = fused;
}

fn merge_short(intervals: &mut Vec<TrendInterval>, log_path: &[f64], min_length: usize) {
    while intervals.len() > 1 {
        let Some(k) = (0..intervals.len())
            .filter(|&k| intervals[k].len() < min_length)
            .min_by_key(|&k| intervals[k].len())
        else {
            break;
        };
        let target = match (k.checked_sub(1), intervals.get(k + 1)) {
            (Some(l), Some(right)) => {
                if change(&intervals[l], log_path).abs() >= change(right, log_path).abs() {
                    l
                } else {
                    k + 1
                }
            }
            (Some(l), None) => l,
            (None, _) => k + 1,
        };
        let short = intervals.remove(k);
        let t = if target > k { target - 1 } else { target };
        intervals[t].start = intervals[t].start.min(short.start);
        intervals[t].end = intervals[t].end.max(short.end);
        normalise(intervals, log_path);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn series(r: Vec<f64>) -> ReturnSeries {
        ReturnSeries::new("i", r).unwrap()
    }

    fn path_returns(moves: &[(f64, usize)]) -> Vec<f64> {
        let mut r = Vec::new();
        for &(total, steps) in moves {
            let step = (1.0 + total).powf(1.0 / steps as f64) - 1.0;
            r.extend(core::iter::repeat(step).take(steps));
        }
        r
    }

    #[test]
    fn index_is_column_mean() {
        let p = Panel::synthetic("a", vec![vec![0.1, -0.1], vec![-0.1, 0.1]]).unwrap();
        assert_eq!(equal_weight_index(&p).unwrap().returns, vec![0.0, 0.0]);
        let same = Panel::synthetic("a", vec![vec![0.01, 0.02, -0.03]; 4]).unwrap();
        let idx = equal_weight_index(&same).unwrap().returns;
        for (a, b) in idx.iter().zip(&[0.01, 0.02, -0.03]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn monotone_path_is_one_up_trend() {
        let s = segment_trends(&series(vec![0.01; 50]), 0.05, 5).unwrap();
        assert_eq!(
            s.intervals,
            vec![TrendInterval {
                start: 0,
                end: 50,
                direction: Direction::Up
            }]
        );
    }

    #[test]
    fn up_down_up() {
        let r = path_returns(&[(0.10, 20), (-0.10, 20), (0.10, 20)]);
        let s = segment_trends(&series(r), 0.05, 5).unwrap();
        let dirs: Vec<Direction> = s.intervals.iter().map(|i| i.direction).collect();
        assert_eq!(dirs, vec![Direction::Up, Direction::Down, Direction::Up]);
        let bounds: Vec<(usize, usize)> = s.intervals.iter().map(|i| (i.start, i.end)).collect();
        assert_eq!(bounds, vec![(0, 20), (20, 40), (40, 60)]);
    }

    #[test]
    fn initial_small_dip_absorbed() {
        // 3-step dip below start, then a long rally: the dip is shorter than
        // min_length and merges into the rally.
        let mut r = vec![-0.001; 3];
        r.extend(vec![0.01; 40]);
        let s = segment_trends(&series(r), 0.05, 5).unwrap();
        assert_eq!(s.intervals.len(), 1);
        assert_eq!(s.intervals[0].direction, Direction::Up);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(segment_trends(&series(vec![0.0; 10]), 0.0, 2).is_err());
        assert!(segment_trends(&series(vec![0.0; 3]), 0.1, 5).is_err());
    }
}
