//! Loading JHU CSSE time-series tables and generic node-by-time matrices.
//!
//! JHU layouts (one row per locality, dates as trailing `m/d/yy` columns):
//!
//! | layout | metadata columns used | label |
//! |--------|-----------------------|-------|
//! | global | `Province/State`, `Country/Region`, `Lat`, `Long` | `Province, Country` or `Country` |
//! | usa    | `Admin2`, `Province_State`, `Lat`, `Long_`, optional `Combined_Key` | `Combined_Key` |
//!
//! Any other non-date header cells before the first date column are
//! ignored. Rows with empty or `(0, 0)` coordinates are excluded and recorded.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geo_graph::NodeTable;
use crate::tv_signal::{LabeledSignal, TvSignal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JhuLayout {
    Global,
    Usa,
}

/// Inclusive date range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DateWindow {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateWindow {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self> {
        if end < start {
            return invalid(format!("date window ends ({end}) before it starts ({start})"));
        }
        Ok(Self { start, end })
    }

    /// January 22 to April 6, 2020.
    pub fn early_pandemic() -> Self {
        Self {
            start: NaiveDate::from_ymd_opt(2020, 1, 22).expect("valid date"),
            end: NaiveDate::from_ymd_opt(2020, 4, 6).expect("valid date"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DroppedRow {
    pub line: u64,
    pub label: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseRow {
    pub label: String,
    pub latitude: f64,
    pub longitude: f64,
    /// Cumulative counts, one per date of the table.
    pub counts: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawCaseTable {
    pub source: String,
    pub layout: JhuLayout,
    pub dates: Vec<NaiveDate>,
    pub rows: Vec<CaseRow>,
    pub dropped: Vec<DroppedRow>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Provenance {
    pub source: String,
    pub rows_read: usize,
    pub dropped: Vec<DroppedRow>,
    pub differenced: bool,
    pub clamp_negative: bool,
    pub clamped_cells: usize,
}

/// Nodes plus the signal defined on them.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub nodes: NodeTable<f64>,
    pub signal: TvSignal<f64>,
    pub time_labels: Vec<String>,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_steps(&self) -> usize {
        self.signal.n_steps()
    }

    pub fn labeled_signal(&self) -> LabeledSignal<f64> {
        LabeledSignal {
            signal: self.signal.clone(),
            node_labels: self.nodes.labels().to_vec(),
            time_labels: self.time_labels.clone(),
        }
    }

    /// Coordinates as `label,latitude,longitude`.
    pub fn write_coords_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["label", "latitude", "longitude"])?;
        for (label, &(lat, lon)) in self.nodes.labels().iter().zip(self.nodes.coords()) {
            w.write_record([label.clone(), format!("{lat:.16e}"), format!("{lon:.16e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn parse_jhu_date(s: &str) -> Option<NaiveDate> {
    let s = s.trim();
    NaiveDate::parse_from_str(s, "%m/%d/%y")
        .or_else(|_| NaiveDate::parse_from_str(s, "%m/%d/%Y"))
        .ok()
}


struct Columns {
    lat: usize,
    lon: usize,
    label_parts: Vec<usize>,
    first_date: usize,
}

fn locate_columns(header: &csv::StringRecord, layout: JhuLayout, source: &str) -> Result<Columns> {
    let find = |name: &str| header.iter().position(|h| h.trim() == name);
    let need = |name: &str| {
        find(name).ok_or_else(|| Error::Parse {
            path: source.into(),
            line: 1,
            message: format!("missing column {name:?} for the {layout:?} layout"),
        })
    };
    let (lat, lon, label_parts) = match layout {
        JhuLayout::Global => {
            let province = need("Province/State")?;
            let country = need("Country/Region")?;
            (need("Lat")?, need("Long")?, vec![province, country])
        }
        JhuLayout::Usa => {
            let lat = need("Lat")?;
            let lon = need("Long_")?;
            let label = match find("Combined_Key") {
                Some(c) => vec![c],
                None => vec![need("Admin2")?, need("Province_State")?],
            };
            (lat, lon, label)
        }
    };
    let first_date = header
        .iter()
        .position(|h| parse_jhu_date(h).is_some())
        .ok_or_else(|| Error::Parse {
            path: source.into(),
            line: 1,
            message: "no date columns in header".into(),
        })?;
    if lat.max(lon).max(*label_parts.iter().max().unwrap_or(&0)) >= first_date {
        return Err(Error::Parse {
            path: source.into(),
            line: 1,
            message: "metadata columns must precede the date columns".into(),
        });
    }
    Ok(Columns {
        lat,
        lon,
        label_parts,
        first_date,
    })
}

pub fn parse_jhu(path: &Path, layout: JhuLayout, window: Option<DateWindow>) -> Result<RawCaseTable> {
    let file = File::open(path)?;
    parse_jhu_reader(file, &path.display().to_string(), layout, window)
}

/// Parses a JHU table, keeping only the dates inside `window` when given.
pub fn parse_jhu_reader<R: Read>(
    input: R,
    source: &str,
    layout: JhuLayout,
    window: Option<DateWindow>,
) -> Result<RawCaseTable> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = rdr.headers()?.clone();
    let cols = locate_columns(&header, layout, source)?;

    let mut all_dates = Vec::new();
    for (c, h) in header.iter().enumerate().skip(cols.first_date) {
        let d = parse_jhu_date(h).ok_or_else(|| Error::Parse {
            path: source.into(),
            line: 1,
            message: format!("column {c}: {h:?} is not a m/d/yy date"),
        })?;
        if let Some(&prev) = all_dates.last() {
            if d != prev + chrono::Duration::days(1) {
                return Err(Error::Parse {
                    path: source.into(),
                    line: 1,
                    message: format!("dates are not consecutive days at column {c} ({h})"),
                });
            }
        }
        all_dates.push(d);
    }
    let (lo, hi) = match window {
        None => (0, all_dates.len()),
        Some(w) => {
            let lo = all_dates.iter().position(|&d| d == w.start);
            let hi = all_dates.iter().position(|&d| d == w.end);
            match (lo, hi) {
                (Some(lo), Some(hi)) => (lo, hi + 1),
                _ => {
                    return invalid(format!(
                        "{source}: window {}..={} not covered by the file's dates",
                        w.start, w.end
                    ))
                }
            }
        }
    };
    let dates = all_dates[lo..hi].to_vec();

    let mut rows = Vec::new();
    let mut dropped = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() != header.len() {
            return Err(Error::Parse {
                path: source.into(),
                line,
                message: format!("expected {} fields, found {}", header.len(), rec.len()),
            });
        }
        let label = cols
            .label_parts
            .iter()
            .map(|&c| rec[c].trim())
            .filter(|s| !s.is_empty())
            .collect::<Vec<_>>()
            .join(", ");
        let coord = |c: usize| -> Result<Option<f64>> {
            let cell = rec[c].trim();
            if cell.is_empty() {
                return Ok(None);
            }
            cell.parse::<f64>().map(Some).map_err(|_| Error::Cell {
                path: source.into(),
                row: line,
                column: c,
                header: header[c].to_string(),
                value: cell.into(),
            })
        };
        let (lat, lon) = match (coord(cols.lat)?, coord(cols.lon)?) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                dropped.push(DroppedRow { line, label, reason: "missing coordinates".into() });
                continue;
            }
        };
        if lat == 0.0 && lon == 0.0 {
            dropped.push(DroppedRow { line, label, reason: "zero coordinates".into() });
            continue;
        }
        if !lat.is_finite() || !lon.is_finite() || lat.abs() > 90.0 || lon.abs() > 180.0 {
            dropped.push(DroppedRow { line, label, reason: "coordinates out of range".into() });
            continue;
        }
        let mut counts = Vec::with_capacity(dates.len());
        for c in cols.first_date + lo..cols.first_date + hi {
            let cell = rec[c].trim();
            let v = cell.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::Cell {
                path: source.into(),
                row: line,
                column: c,
                header: header[c].to_string(),
                value: cell.into(),
            })?;
            counts.push(v);
        }
        rows.push(CaseRow { label, latitude: lat, longitude: lon, counts });
    }
    Ok(RawCaseTable {
        source: source.into(),
        layout,
        dates,
        rows,
        dropped,
    })
}

/// Daily new cases: `new(t) = cum(t) - cum(t-1)`, with the first day passed
/// through. Negative differences are set to zero when `clamp_negative`.
pub fn cumulative_to_new(table: &RawCaseTable, clamp_negative: bool) -> Result<Dataset> {
    if table.dates.len() < 2 {
        return invalid("need at least two dates to difference cumulative counts");
    }
    let n = table.rows.len();
    let m = table.dates.len();
    let mut clamped_cells = 0;
    let mut values = vec![0.0; n * m];
    for (i, row) in table.rows.iter().enumerate() {
        for t in 0..m {
            let mut v = if t == 0 { row.counts[0] } else { row.counts[t] - row.counts[t - 1] };
            if clamp_negative && v < 0.0 {
                v = 0.0;
                clamped_cells += 1;
            }
            values[t * n + i] = v;
        }
    }
    let nodes = NodeTable::new(
        table.rows.iter().map(|r| (r.latitude, r.longitude)).collect(),
        table.rows.iter().map(|r| r.label.clone()).collect(),
    )?;
    Ok(Dataset {
        nodes,
        signal: TvSignal::from_vec(n, m, values)?,
        time_labels: table.dates.iter().map(|d| d.format("%Y-%m-%d").to_string()).collect(),
        provenance: Provenance {
            source: table.source.clone(),
            rows_read: table.rows.len() + table.dropped.len(),
            dropped: table.dropped.clone(),
            differenced: true,
            clamp_negative,
            clamped_cells,
        },
    })
}

/// Node-by-time values (the signal CSV format) plus a `label,latitude,longitude`
/// coordinate file with one row per node, in the same order.
pub fn load_matrix_dataset(values_path: &Path, coords_path: &Path) -> Result<Dataset> {
    let values = LabeledSignal::<f64>::read_csv(
        File::open(values_path)?,
        &values_path.display().to_string(),
    )?;
    let coords = read_coords_csv(File::open(coords_path)?, &coords_path.display().to_string())?;
    dataset_from_parts(values, coords, &values_path.display().to_string())
}

pub fn dataset_from_parts(
    values: LabeledSignal<f64>,
    coords: Vec<(f64, f64)>,
    source: &str,
) -> Result<Dataset> {
    if coords.len() != values.signal.n_nodes() {
        return Err(Error::DimensionMismatch(format!(
            "values have {} nodes but coordinates list {}",
            values.signal.n_nodes(),
            coords.len()
        )));
    }
    let rows_read = coords.len();
    Ok(Dataset {
        nodes: NodeTable::new(coords, values.node_labels)?,
        signal: values.signal,
        time_labels: values.time_labels,
        provenance: Provenance {
            source: source.into(),
            rows_read,
            ..Provenance::default()
        },
    })
}

pub fn read_coords_csv<R: Read>(input: R, source: &str) -> Result<Vec<(f64, f64)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = rdr.headers()?.clone();
    if header.len() != 3 {
        return Err(Error::Parse {
            path: source.into(),
            line: 1,
            message: "coordinate header must be `label,latitude,longitude`".into(),
        });
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let cell = |c: usize| -> Result<f64> {
            rec[c].parse::<f64>().map_err(|_| Error::Cell {
                path: source.into(),
                row: line,
                column: c,
                header: header[c].to_string(),
                value: rec[c].to_string(),
            })
        };
        out.push((cell(1)?, cell(2)?));
    }
    Ok(out)
}
