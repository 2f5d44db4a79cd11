//! CSV formats: prices, panels, segment sets, answer keys, trends, feature
//! matrices (with a JSON sidecar naming the family), scores and ROC points.
//!
//! Floats are written in their shortest round-trip form, so reading a file
//! back reproduces every value bit for bit.

use std::fs::File;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use realism_core::features::{FeatureFamily, FeatureMatrix};
use realism_core::trends::TrendInterval;
use realism_core::{Label, Matrix, Panel, Segment};

use crate::error::{CliError, CliResult};

pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn parse_f64(field: &str, what: &str, line: u64) -> CliResult<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| CliError::validation(format!("line {line}: {what} `{field}` is not a number")))
}

fn reader(path: &Path) -> CliResult<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    let line = e.position().map(|p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        kind => {
            let where_ = line.map_or(String::new(), |l| format!("line {l}: "));
            CliError::validation(format!("{}: {where_}{kind:?}", path.display()))
        }
    }
}

type Rows = Vec<(u64, csv::StringRecord)>;

/// Data rows with their 1-based line numbers.
fn records(path: &Path) -> CliResult<(Vec<String>, Rows)> {
    let mut rdr = reader(path)?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.iter().all(str::is_empty) {
            continue;
        }
        if rec.len() != header.len() {
            return Err(CliError::validation(format!(
                "{}: line {line}: {} fields, header has {}",
                path.display(),
                rec.len(),
                header.len()
            )));
        }
        rows.push((line, rec));
    }
    Ok((header, rows))
}

fn expect_prefix(path: &Path, header: &[String], prefix: &[&str]) -> CliResult<()> {
    let ok = header.len() >= prefix.len() && header.iter().zip(prefix).all(|(h, p)| h.eq_ignore_ascii_case(p));
    if ok {
        Ok(())
    } else {
        Err(CliError::validation(format!(
            "{}: line 1: header must start with `{}`",
            path.display(),
            prefix.join(",")
        )))
    }
}

fn write_rows(path: &Path, header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let to_err = |e: csv::Error| CliError::validation(format!("{}: {e}", path.display()));
    w.write_record(header).map_err(to_err)?;
    for r in rows {
        w.write_record(&r).map_err(to_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::validation(e.to_string()))?;
    write_bytes(path, &bytes)
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn read_string(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// One observation of the `date,asset_id,price` format.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceRecord {
    pub line: u64,
    pub date: NaiveDate,
    pub asset_id: String,
    pub price: f64,
}

pub fn read_prices(path: &Path) -> CliResult<Vec<PriceRecord>> {
    let (header, rows) = records(path)?;
    expect_prefix(path, &header, &["date", "asset_id", "price"])?;
    if header.len() != 3 {
        return Err(CliError::validation(format!(
            "{}: line 1: expected exactly 3 columns",
            path.display()
        )));
    }
    rows.into_iter()
        .map(|(line, r)| {
            let date = NaiveDate::parse_from_str(&r[0], "%Y-%m-%d")
                .map_err(|_| CliError::validation(format!("line {line}: date `{}` is not YYYY-MM-DD", &r[0])))?;
            if r[1].is_empty() {
                return Err(CliError::validation(format!("line {line}: empty asset_id")));
            }
            let price = parse_f64(&r[2], "price", line)?;
            if !(price.is_finite() && price > 0.0) {
                return Err(CliError::validation(format!(
                    "line {line}: price {price} is not positive"
                )));
            }
            Ok(PriceRecord {
                line,
                date,
                asset_id: r[1].to_string(),
                price,
            })
        })
        .collect::<CliResult<Vec<_>>>()
        .map_err(|e| e.at(path))
}

pub fn write_prices(path: &Path, records: &[PriceRecord]) -> CliResult<()> {
    let header = ["date", "asset_id", "price"].map(String::from);
    write_rows(
        path,
        &header,
        records.iter().map(|r| {
            vec![
                r.date.format("%Y-%m-%d").to_string(),
                r.asset_id.clone(),
                fmt_f64(r.price),
            ]
        }),
    )
}

/// `date,<asset ids>` with one row per timestamp.
pub fn read_panel(path: &Path) -> CliResult<Panel> {
    let (header, rows) = records(path)?;
    expect_prefix(path, &header, &["date"])?;
    let ids: Vec<String> = header[1..].to_vec();
    if ids.is_empty() || rows.is_empty() {
        return Err(CliError::validation(format!("{}: panel is empty", path.display())));
    }
    let mut columns = vec![Vec::with_capacity(rows.len()); ids.len()];
    let mut timestamps = Vec::with_capacity(rows.len());
    for (line, r) in &rows {
        timestamps.push(r[0].to_string());
        for (j, col) in columns.iter_mut().enumerate() {
            col.push(parse_f64(&r[j + 1], "return", *line).map_err(|e| e.at(path))?);
        }
    }
    Panel::from_rows(ids, timestamps, columns).map_err(|e| CliError::from(e).at(path))
}

pub fn write_panel(path: &Path, panel: &Panel) -> CliResult<()> {
    let header: Vec<String> = std::iter::once("date".to_string())
        .chain(panel.asset_ids().iter().cloned())
        .collect();
    let rows = (0..panel.n_steps()).map(|t| {
        std::iter::once(panel.timestamps()[t].clone())
            .chain(panel.rows().map(|r| fmt_f64(r[t])))
            .collect()
    });
    write_rows(path, &header, rows)
}

fn numbered(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |i| format!("{prefix}{i}"))
}

fn parse_label(field: &str, line: u64) -> CliResult<Option<Label>> {
    if field.is_empty() {
        return Ok(None);
    }
    Label::parse(field)
        .map(Some)
        .ok_or_else(|| CliError::validation(format!("line {line}: label `{field}` is not real/simulated/0/1")))
}

/// `segment_id,label,r1..rN`; the label column may be empty. Each segment's
/// origin is its id, since bundles must not reveal the source asset.
pub fn read_segments(path: &Path) -> CliResult<Vec<(String, Segment)>> {
    let (header, rows) = records(path)?;
    expect_prefix(path, &header, &["segment_id", "label"])?;
    if header.len() < 3 {
        return Err(CliError::validation(format!(
            "{}: line 1: no return columns",
            path.display()
        )));
    }
    rows.into_iter()
        .map(|(line, r)| {
            let values = r
                .iter()
                .skip(2)
                .map(|f| parse_f64(f, "return", line))
                .collect::<CliResult<Vec<f64>>>()?;
            let mut seg = Segment::new(values, &r[0], 0);
            seg.label = parse_label(&r[1], line)?;
            Ok((r[0].to_string(), seg))
        })
        .collect::<CliResult<Vec<_>>>()
        .map_err(|e| e.at(path))
}

pub fn write_segments(path: &Path, items: &[(String, Segment)], with_labels: bool) -> CliResult<()> {
    let n = items.first().map_or(0, |(_, s)| s.len());
    if items.iter().any(|(_, s)| s.len() != n) {
        return Err(CliError::validation("segments of unequal length"));
    }
    let header: Vec<String> = ["segment_id", "label"]
        .map(String::from)
        .into_iter()
        .chain(numbered("r", n))
        .collect();
    let rows = items.iter().map(|(id, s)| {
        let label = match (with_labels, s.label) {
            (true, Some(l)) => l.as_str().to_string(),
            _ => String::new(),
        };
        [id.clone(), label]
            .into_iter()
            .chain(s.values.iter().map(|v| fmt_f64(*v)))
            .collect()
    });
    write_rows(path, &header, rows)
}

/// Withheld labels of a test set: `segment_id,label`.
pub fn write_key(path: &Path, items: &[(String, Segment)]) -> CliResult<()> {
    let header = ["segment_id", "label"].map(String::from);
    let rows = items
        .iter()
        .map(|(id, s)| {
            let l = s
                .label
                .ok_or_else(|| CliError::validation(format!("segment {id} has no label")))?;
            Ok(vec![id.clone(), l.as_str().to_string()])
        })
        .collect::<CliResult<Vec<_>>>()?;
    write_rows(path, &header, rows)
}

pub fn read_key(path: &Path) -> CliResult<Vec<(String, Label)>> {
    let (header, rows) = records(path)?;
    expect_prefix(path, &header, &["segment_id", "label"])?;
    rows.into_iter()
        .map(|(line, r)| {
            let label =
                parse_label(&r[1], line)?.ok_or_else(|| CliError::validation(format!("line {line}: missing label")))?;
            Ok((r[0].to_string(), label))
        })
        .collect::<CliResult<Vec<_>>>()
        .map_err(|e| e.at(path))
}

/// `start,end,direction` with `end` exclusive, in panel step indices.
pub fn write_trends(path: &Path, intervals: &[TrendInterval]) -> CliResult<()> {
    let header = ["start", "end", "direction"].map(String::from);
    let rows = intervals.iter().map(|iv| {
        vec![
            iv.start.to_string(),
            iv.end.to_string(),
            iv.direction.as_str().to_string(),
        ]
    });
    write_rows(path, &header, rows)
}

/// Sidecar describing a feature CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureSidecar {
    pub family: FeatureFamily,
    pub dim: usize,
    pub rows: usize,
    /// Ids of rows whose vector contains sentinel values.
    pub flagged: Vec<String>,
}

pub fn sidecar_path(features_csv: &Path) -> PathBuf {
    features_csv.with_extension("meta.json")
}

pub fn write_features(path: &Path, fm: &FeatureMatrix) -> CliResult<()> {
    let k = fm.values.n_cols();
    let header: Vec<String> = ["segment_id", "label"]
        .map(String::from)
        .into_iter()
        .chain(numbered("f", k))
        .collect();
    let rows = (0..fm.n_rows()).map(|i| {
        let label = fm
            .labels
            .as_ref()
            .map_or(String::new(), |l| Label::from_class(l[i]).as_str().to_string());
        [fm.segment_ids[i].clone(), label]
            .into_iter()
            .chain(fm.values.row(i).iter().map(|v| fmt_f64(*v)))
            .collect()
    });
    write_rows(path, &header, rows)?;
    let sidecar = FeatureSidecar {
        family: fm.family,
        dim: k,
        rows: fm.n_rows(),
        flagged: (0..fm.n_rows())
            .filter(|&i| fm.flagged[i])
            .map(|i| fm.segment_ids[i].clone())
            .collect(),
    };
    write_json(&sidecar_path(path), &sidecar)
}

pub fn read_features(path: &Path) -> CliResult<FeatureMatrix> {
    let sidecar: FeatureSidecar = read_json(&sidecar_path(path))?;
    let (header, rows) = records(path)?;
    expect_prefix(path, &header, &["segment_id", "label"])?;
    if header.len() - 2 != sidecar.dim {
        return Err(CliError::validation(format!(
            "{}: {} feature columns, sidecar says {}",
            path.display(),
            header.len() - 2,
            sidecar.dim
        )));
    }
    let mut ids = Vec::with_capacity(rows.len());
    let mut labels = Vec::with_capacity(rows.len());
    let mut data = Vec::with_capacity(rows.len() * sidecar.dim);
    for (line, r) in &rows {
        ids.push(r[0].to_string());
        labels.push(parse_label(&r[1], *line).map_err(|e| e.at(path))?);
        for f in r.iter().skip(2) {
            data.push(parse_f64(f, "feature", *line).map_err(|e| e.at(path))?);
        }
    }
    let labels = if labels.iter().all(Option::is_some) && !labels.is_empty() {
        Some(labels.into_iter().map(|l| l.map_or(0, Label::class)).collect())
    } else if labels.iter().all(Option::is_none) {
        None
    } else {
        return Err(CliError::validation(format!(
            "{}: some rows are labelled and some are not",
            path.display()
        )));
    };
    let values = Matrix::from_vec(rows.len(), sidecar.dim, data)?;
    let mut fm = FeatureMatrix::new(sidecar.family, ids, values, labels)?;
    for (i, id) in fm.segment_ids.iter().enumerate() {
        fm.flagged[i] = sidecar.flagged.contains(id);
    }
    Ok(fm)
}

pub fn write_scores(path: &Path, ids: &[String], scores: &[f64]) -> CliResult<()> {
    let header = ["segment_id", "score"].map(String::from);
    write_rows(
        path,
        &header,
        ids.iter().zip(scores).map(|(id, s)| vec![id.clone(), fmt_f64(*s)]),
    )
}

pub fn read_scores(path: &Path) -> CliResult<Vec<(String, f64)>> {
    let (header, rows) = records(path)?;
    expect_prefix(path, &header, &["segment_id", "score"])?;
    rows.into_iter()
        .map(|(line, r)| Ok((r[0].to_string(), parse_f64(&r[1], "score", line)?)))
        .collect::<CliResult<Vec<_>>>()
        .map_err(|e| e.at(path))
}

pub fn write_roc(path: &Path, points: &[(f64, f64)]) -> CliResult<()> {
    let header = ["fpr", "tpr"].map(String::from);
    write_rows(
        path,
        &header,
        points.iter().map(|(x, y)| vec![fmt_f64(*x), fmt_f64(*y)]),
    )
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut bytes =
        serde_json::to_vec_pretty(value).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
    bytes.push(b'\n');
    write_bytes(path, &bytes)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = read_string(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
}
