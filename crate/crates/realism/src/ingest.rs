//! Alignment of ragged price observations into a return panel.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use realism_core::series::simple_returns;
use realism_core::Panel;

use crate::error::{CliError, CliResult};
use crate::io::PriceRecord;

pub const DEFAULT_COVERAGE: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetCoverage {
    pub asset_id: String,
    pub observed: usize,
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub threshold: f64,
    pub n_dates: usize,
    pub kept: Vec<AssetCoverage>,
    pub dropped: Vec<AssetCoverage>,
    /// Leading dates removed because some kept asset had no price yet.
    pub trimmed_dates: usize,
    /// Cells forward-filled at the price level.
    pub filled_cells: usize,
}

impl IngestReport {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "dates in window: {}", self.n_dates);
        let _ = writeln!(s, "coverage threshold: {}", self.threshold);
        let _ = writeln!(s, "assets kept: {}", self.kept.len());
        let _ = writeln!(s, "assets dropped: {}", self.dropped.len());
        for a in &self.dropped {
            let _ = writeln!(
                s,
                "  dropped {} (coverage {:.4}, {} of {} dates)",
                a.asset_id, a.coverage, a.observed, self.n_dates
            );
        }
        let _ = writeln!(s, "leading dates trimmed: {}", self.trimmed_dates);
        let _ = writeln!(s, "forward-filled cells: {}", self.filled_cells);
        s
    }
}

/// Keeps assets observed on at least `coverage` of all dates, trims the
/// window to start where every kept asset has a price, forward-fills gaps
/// at the price level and differences into simple returns.
pub fn align(records: &[PriceRecord], coverage: f64) -> CliResult<(Panel, IngestReport)> {
    if !(coverage > 0.0 && coverage <= 1.0) {
        return Err(CliError::validation(format!(
            "coverage threshold {coverage} must lie in (0, 1]"
        )));
    }
    let mut by_asset: BTreeMap<&str, BTreeMap<NaiveDate, f64>> = BTreeMap::new();
    for r in records {
        if by_asset
            .entry(&r.asset_id)
            .or_default()
            .insert(r.date, r.price)
            .is_some()
        {
            return Err(CliError::validation(format!(
                "line {}: second price for {} on {}",
                r.line, r.asset_id, r.date
            )));
        }
    }
    let dates: Vec<NaiveDate> = records
        .iter()
        .map(|r| r.date)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let n_dates = dates.len();
    let (mut kept, mut dropped) = (Vec::new(), Vec::new());
    for (id, obs) in &by_asset {
        let c = AssetCoverage {
            asset_id: id.to_string(),
            observed: obs.len(),
            coverage: obs.len() as f64 / n_dates as f64,
        };
        if c.coverage >= coverage {
            kept.push(c);
        } else {
            log::warn!("dropping {id}: coverage {:.4} below {coverage}", c.coverage);
            dropped.push(c);
        }
    }
    if kept.is_empty() {
        return Err(CliError::validation(
            "no asset meets the coverage threshold; panel is empty",
        ));
    }
    let first = kept
        .iter()
        .map(|a| {
            *by_asset[a.asset_id.as_str()]
                .keys()
                .next()
                .expect("kept assets have observations")
        })
        .max()
        .expect("nonempty");
    let start = dates.partition_point(|d| *d < first);
    let window = &dates[start..];
    if window.len() < 2 {
        return Err(CliError::validation(
            "fewer than two aligned dates; no returns can be formed",
        ));
    }
    let mut filled_cells = 0;
    let mut rows = Vec::with_capacity(kept.len());
    for a in &kept {
        let obs = &by_asset[a.asset_id.as_str()];
        let mut last = None;
        let prices: Vec<f64> = window
            .iter()
            .map(|d| {
                match obs.get(d) {
                    Some(p) => last = Some(*p),
                    None => filled_cells += 1,
                }
                last.expect("window starts after every first observation")
            })
            .collect();
        rows.push(simple_returns(&prices)?);
    }
    let ids = kept.iter().map(|a| a.asset_id.clone()).collect();
    let timestamps = window[1..].iter().map(|d| d.format("%Y-%m-%d").to_string()).collect();
    let panel = Panel::from_rows(ids, timestamps, rows)?;
    let report = IngestReport {
        threshold: coverage,
        n_dates,
        kept,
        dropped,
        trimmed_dates: start,
        filled_cells,
    };
    Ok((panel, report))
}
