//! Price and return series, the aligned return panel and labelled segments.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::ops::Range;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PriceSeries {
    pub asset_id: String,
    pub timestamps: Vec<String>,
    pub prices: Vec<f64>,
}

impl PriceSeries {
    pub fn new(asset_id: impl Into<String>, timestamps: Vec<String>, prices: Vec<f64>) -> Result<Self> {
        if timestamps.len() != prices.len() {
            return Err(Error::input("timestamps and prices differ in length"));
        }
        check_increasing(&timestamps)?;
        if let Some(i) = prices.iter().position(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::input(format!("non-positive price {} at index {i}", prices[i])));
        }
        Ok(PriceSeries {
            asset_id: asset_id.into(),
            timestamps,
            prices,
        })
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ReturnSeries {
    pub asset_id: String,
    pub returns: Vec<f64>,
}

impl ReturnSeries {
    pub fn new(asset_id: impl Into<String>, returns: Vec<f64>) -> Result<Self> {
        check_returns(&returns)?;
        Ok(ReturnSeries {
            asset_id: asset_id.into(),
            returns,
        })
    }

    pub fn len(&self) -> usize {
        self.returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.is_empty()
    }
}

/// Simple returns `p(t) / p(t-1) - 1`.
pub fn simple_returns(prices: &[f64]) -> Result<Vec<f64>> {
    if prices.len() < 2 {
        return Err(Error::input("at least two prices are needed"));
    }
    if let Some(i) = prices.iter().position(|p| !(p.is_finite() && *p > 0.0)) {
        return Err(Error::input(format!("non-positive price {} at index {i}", prices[i])));
    }
    Ok(prices.windows(2).map(|w| w[1] / w[0] - 1.0).collect())
}

/// Compounds simple returns from `p0`; the output has one more element.
pub fn compound_prices(returns: &[f64], p0: f64) -> Result<Vec<f64>> {
    if !(p0.is_finite() && p0 > 0.0) {
        return Err(Error::param("p0", "must be positive"));
    }
    check_returns(returns)?;
    let mut prices = Vec::with_capacity(returns.len() + 1);
    prices.push(p0);
    let mut p = p0;
    for r in returns {
        p *= 1.0 + r;
        prices.push(p);
    }
    Ok(prices)
}

pub fn to_returns(prices: &PriceSeries) -> Result<ReturnSeries> {
    Ok(ReturnSeries {
        asset_id: prices.asset_id.clone(),
        returns: simple_returns(&prices.prices)?,
    })
}

/// Prices on a synthetic step calendar (`index_timestamps`).
pub fn to_prices(returns: &ReturnSeries, p0: f64) -> Result<PriceSeries> {
    let prices = compound_prices(&returns.returns, p0)?;
    Ok(PriceSeries {
        asset_id: returns.asset_id.clone(),
        timestamps: index_timestamps(prices.len()),
        prices,
    })
}

/// Zero-padded step indices; they sort lexicographically in step order.
pub fn index_timestamps(n: usize) -> Vec<String> {
    let width = digits(n.saturating_sub(1)).max(6);
    (0..n).map(|i| format!("{i:0width$}")).collect()
}

fn digits(mut n: usize) -> usize {
    let mut d = 1;
    while n >= 10 {
        n /= 10;
        d += 1;
    }
    d
}

fn check_returns(returns: &[f64]) -> Result<()> {
    if let Some(i) = returns.iter().position(|r| !(r.is_finite() && *r > -1.0)) {
        return Err(Error::input(format!("return {} at index {i} is not > -1", returns[i])));
    }
    Ok(())
}

fn check_increasing(ts: &[String]) -> Result<()> {
    if let Some(i) = ts.windows(2).position(|w| w[0] >= w[1]) {
        return Err(Error::input(format!(
            "timestamps not strictly increasing at {} -> {}",
            ts[i],
            ts[i + 1]
        )));
    }
    Ok(())
}

/// Time-aligned panel of simple returns, one row per asset.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Panel {
    asset_ids: Vec<String>,
    timestamps: Vec<String>,
    values: Vec<f64>,
}

impl Panel {
    pub fn new(asset_ids: Vec<String>, timestamps: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if values.len() != asset_ids.len() * timestamps.len() {
            return Err(Error::input(format!(
                "panel has {} cells, expected {} assets x {} steps",
                values.len(),
                asset_ids.len(),
                timestamps.len()
            )));
        }
        let unique: BTreeSet<&String> = asset_ids.iter().collect();
        if unique.len() != asset_ids.len() {
            return Err(Error::input("duplicate asset id in panel"));
        }
        check_increasing(&timestamps)?;
        check_returns(&values)?;
        Ok(Panel {
            asset_ids,
            timestamps,
            values,
        })
    }

    pub fn from_rows(asset_ids: Vec<String>, timestamps: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != asset_ids.len() {
            return Err(Error::input("row count differs from asset count"));
        }
        let n = timestamps.len();
        let mut values = Vec::with_capacity(rows.len() * n);
        for (id, r) in asset_ids.iter().zip(&rows) {
            if r.len() != n {
                return Err(Error::input(format!(
                    "asset {id} has {} returns, expected {n}",
                    r.len()
                )));
            }
            values.extend_from_slice(r);
        }
        Panel::new(asset_ids, timestamps, values)
    }

    /// Panel with generated ids (`{prefix}0001`, ...) and a step calendar.
    pub fn synthetic(prefix: &str, rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_steps = rows.first().map_or(0, Vec::len);
        let width = digits(rows.len()).max(4);
        let ids = (0..rows.len()).map(|i| format!("{prefix}{:0width$}", i + 1)).collect();
        Panel::from_rows(ids, index_timestamps(n_steps), rows)
    }

    pub fn from_series(series: &[ReturnSeries], timestamps: Vec<String>) -> Result<Self> {
        let ids = series.iter().map(|s| s.asset_id.clone()).collect();
        let rows = series.iter().map(|s| s.returns.clone()).collect();
        Panel::from_rows(ids, timestamps, rows)
    }

    #[inline]
    pub fn n_assets(&self) -> usize {
        self.asset_ids.len()
    }

    #[inline]
    pub fn n_steps(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn asset_ids(&self) -> &[String] {
        &self.asset_ids
    }

    pub fn timestamps(&self) -> &[String] {
        &self.timestamps
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn row(&self, asset: usize) -> &[f64] {
        let n = self.n_steps();
        &self.values[asset * n..(asset + 1) * n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.n_assets()).map(move |a| self.row(a))
    }

    pub fn series(&self, asset: usize) -> ReturnSeries {
        ReturnSeries {
            asset_id: self.asset_ids[asset].clone(),
            returns: self.row(asset).to_vec(),
        }
    }

    /// All asset returns at step `t`.
    pub fn step(&self, t: usize) -> Vec<f64> {
        (0..self.n_assets()).map(|a| self.row(a)[t]).collect()
    }

    pub fn select_assets(&self, idx: &[usize]) -> Result<Panel> {
        let ids = idx.iter().map(|&i| self.asset_ids[i].clone()).collect();
        let rows = idx.iter().map(|&i| self.row(i).to_vec()).collect();
        Panel::from_rows(ids, self.timestamps.clone(), rows)
    }

    pub fn slice_steps(&self, range: Range<usize>) -> Result<Panel> {
        if range.end > self.n_steps() || range.start > range.end {
            return Err(Error::input("step range outside panel"));
        }
        let rows = (0..self.n_assets())
            .map(|a| self.row(a)[range.clone()].to_vec())
            .collect();
        Panel::from_rows(self.asset_ids.clone(), self.timestamps[range].to_vec(), rows)
    }

    /// Replaces the cell values, keeping ids and timestamps.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Panel> {
        Panel::new(self.asset_ids.clone(), self.timestamps.clone(), values)
    }

    /// Appends the assets of `other`, which must share the timestamps.
    pub fn concat_assets(&self, other: &Panel) -> Result<Panel> {
        if self.timestamps != other.timestamps {
            return Err(Error::input("panels do not share timestamps"));
        }
        let mut ids = self.asset_ids.clone();
        ids.extend(other.asset_ids.iter().cloned());
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        Panel::new(ids, self.timestamps.clone(), values)
    }

    pub fn index_of(&self, asset_id: &str) -> Option<usize> {
        self.asset_ids.iter().position(|a| a == asset_id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Label {
    Real,
    Simulated,
}

impl Label {
    /// Binary class used by classifiers and AUC: simulated is the positive class.
    pub fn class(self) -> u8 {
        match self {
            Label::Real => 0,
            Label::Simulated => 1,
        }
    }

    pub fn from_class(c: u8) -> Self {
        if c == 0 {
            Label::Real
        } else {
            Label::Simulated
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Real => "real",
            Label::Simulated => "simulated",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "real" | "0" => Some(Label::Real),
            "simulated" | "1" => Some(Label::Simulated),
            _ => None,
        }
    }
}

impl core::fmt::Display for Label {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Origin {
    pub asset_id: String,
    pub start: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Segment {
    pub values: Vec<f64>,
    pub origin: Origin,
    pub label: Option<Label>,
}

impl Segment {
    pub fn new(values: Vec<f64>, asset_id: impl ToString, start: usize) -> Self {
        Segment {
            values,
            origin: Origin {
                asset_id: asset_id.to_string(),
                start,
            },
            label: None,
        }
    }

    pub fn labelled(mut self, label: Label) -> Self {
        self.label = Some(label);
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn returns_of_simple_paths() {
        assert_eq!(simple_returns(&[1.0, 2.0, 1.0]).unwrap(), vec![1.0, -0.5]);
        assert_eq!(simple_returns(&[5.0; 4]).unwrap(), vec![0.0; 3]);
        assert!(simple_returns(&[1.0, 0.0]).is_err());
        assert!(simple_returns(&[1.0]).is_err());
    }

    #[test]
    fn prices_of_simple_returns() {
        assert_eq!(compound_prices(&[1.0, -0.5], 1.0).unwrap(), vec![1.0, 2.0, 1.0]);
        assert_eq!(compound_prices(&[], 3.0).unwrap(), vec![3.0]);
        assert!(compound_prices(&[-1.0], 1.0).is_err());
        assert!(compound_prices(&[0.1], 0.0).is_err());
    }

    #[test]
    fn series_wrappers_roundtrip() {
        let ts: Vec<String> = ["2020-01-01", "2020-01-02", "2020-01-03"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let p = PriceSeries::new("A", ts, vec![1.0, 2.0, 1.0]).unwrap();
        let r = to_returns(&p).unwrap();
        assert_eq!(r.returns, vec![1.0, -0.5]);
        let back = to_prices(&r, 1.0).unwrap();
        assert_eq!(back.prices, p.prices);
        assert_eq!(back.timestamps.len(), 3);
    }

    #[test]
    fn panel_validation() {
        let ts = index_timestamps(2);
        assert!(Panel::from_rows(vec!["a".into(), "a".into()], ts.clone(), vec![vec![0.0; 2]; 2]).is_err());
        assert!(Panel::from_rows(vec!["a".into()], ts.clone(), vec![vec![0.0, -1.5]]).is_err());
        let p = Panel::from_rows(vec!["a".into(), "b".into()], ts, vec![vec![0.1, 0.2], vec![0.3, 0.4]]).unwrap();
        assert_eq!(p.step(1), vec![0.2, 0.4]);
        assert_eq!(p.select_assets(&[1]).unwrap().row(0), &[0.3, 0.4]);
        assert_eq!(p.slice_steps(1..2).unwrap().row(1), &[0.4]);
    }

    #[test]
    fn index_timestamps_sort() {
        let ts = index_timestamps(1_000_001);
        assert!(ts.windows(2).all(|w| w[0] < w[1]));
    }
}
