use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{Cadence, Column, Dimension, FeatureSeries, FeatureTable};
use crate::artifact::{csv_string, fmt_f64, write_json, write_text, Provenance};
use crate::error::{Error, Result};

/// One manifest record: which file holds which feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub name: String,
    pub dimension: String,
    pub unit: String,
    pub cadence: String,
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Parse {
        file: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })?;
    // Accept either a bare array or an object wrapping it under "features".
    let list = match value {
        serde_json::Value::Object(mut m) => m.remove("features").unwrap_or(serde_json::Value::Null),
        other => other,
    };
    serde_json::from_value(list).map_err(|e| Error::Parse {
        file: path.to_path_buf(),
        line: 0,
        message: format!("manifest must be an array of {{file, name, dimension, unit, cadence}}: {e}"),
    })
}

fn is_missing_marker(cell: &str) -> bool {
    let c = cell.trim();
    c.is_empty() || ["na", "n/a", "null", "nan"].contains(&c.to_ascii_lowercase().as_str())
}

/// Parses a `date,value` CSV. Cells that are missing markers or fail to
/// parse become missing; bad dates and non-increasing dates are errors.
pub fn parse_series_csv(path: &Path, text: &str, meta: &ManifestEntry) -> Result<FeatureSeries> {
    let dimension: Dimension = meta.dimension.parse().map_err(|_| Error::Parse {
        file: path.to_path_buf(),
        line: 0,
        message: format!("feature `{}`: unknown dimension tag `{}`", meta.name, meta.dimension),
    })?;
    let cadence = match meta.cadence.to_ascii_lowercase().as_str() {
        "daily" => Cadence::Daily,
        "monthly" => Cadence::Monthly,
        other => {
            return Err(Error::Parse {
                file: path.to_path_buf(),
                line: 0,
                message: format!("feature `{}`: unknown cadence `{other}`", meta.name),
            })
        }
    };
    let err = |line: usize, message: String| Error::Parse {
        file: path.to_path_buf(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "date" || &headers[1] != "value" {
        let line = rdr.position().line();
        return Err(err(line as usize, "expected header `date,value`".into()));
    }
    let mut dates: Vec<NaiveDate> = Vec::new();
    let mut values = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let date: NaiveDate = rec
            .get(0)
            .unwrap_or("")
            .parse()
            .map_err(|_| err(line, format!("bad date `{}`", rec.get(0).unwrap_or(""))))?;
        if dates.last().is_some_and(|&prev| date <= prev) {
            return Err(err(line, "non-monotone dates".into()));
        }
        let cell = rec.get(1).unwrap_or("");
        let value = if is_missing_marker(cell) {
            None
        } else {
            cell.parse::<f64>().ok().filter(|v| v.is_finite())
        };
        dates.push(date);
        values.push(value);
    }
    let series = FeatureSeries {
        name: meta.name.clone(),
        dimension,
        unit: meta.unit.clone(),
        cadence,
        dates,
        values,
    };
    series.validate().map_err(|e| err(0, e.to_string()))?;
    Ok(series)
}

/// Reads every series named in the manifest; `file` paths resolve against
/// `dir`.
pub fn ingest(dir: &Path, manifest: &Path) -> Result<Vec<FeatureSeries>> {
    let entries = read_manifest(manifest)?;
    let mut names = HashSet::new();
    for (i, e) in entries.iter().enumerate() {
        if !names.insert(e.name.as_str()) {
            return Err(Error::Parse {
                file: manifest.to_path_buf(),
                line: i + 1,
                message: format!("duplicate feature name `{}` (manifest entry {})", e.name, i + 1),
            });
        }
    }
    let load = |e: &ManifestEntry| -> Result<FeatureSeries> {
        let path: PathBuf = dir.join(&e.file);
        let text = fs::read_to_string(&path).map_err(|err| Error::io(&path, err))?;
        parse_series_csv(&path, &text, e)
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        entries.par_iter().map(load).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        entries.iter().map(load).collect()
    }
}

pub fn series_csv(series: &FeatureSeries, prov: &Provenance) -> Result<String> {
    csv_string(prov, |w| {
        w.write_record(["date", "value"])?;
        for (d, v) in series.dates.iter().zip(&series.values) {
            let cell = v.map(fmt_f64).unwrap_or_else(|| "NA".to_string());
            w.write_record([d.to_string(), cell])?;
        }
        Ok(())
    })
}

/// Wide store: `date,DIM:name,...`; missing cells are empty.
pub fn store_csv(table: &FeatureTable, prov: &Provenance) -> Result<String> {
    csv_string(prov, |w| {
        let mut header = vec!["date".to_string()];
        header.extend(table.columns().iter().map(|c| format!("{}:{}", c.dimension, c.name)));
        w.write_record(&header)?;
        for r in 0..table.n_rows() {
            let mut row = vec![table.dates()[r].to_string()];
            row.extend(table.data().iter().map(|c| fmt_f64(c[r])));
            w.write_record(&row)?;
        }
        Ok(())
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreMeta {
    pub target: String,
    pub columns: Vec<Column>,
    pub rows: usize,
    pub first_date: Option<NaiveDate>,
    pub last_date: Option<NaiveDate>,
    pub monthly_interpolation: String,
}

pub fn store_meta(table: &FeatureTable) -> StoreMeta {
    StoreMeta {
        target: table.target().to_string(),
        columns: table.columns().to_vec(),
        rows: table.n_rows(),
        first_date: table.dates().first().copied(),
        last_date: table.dates().last().copied(),
        monthly_interpolation: "linear between first-of-month anchors".to_string(),
    }
}

fn meta_path(csv_path: &Path) -> PathBuf {
    let stem = csv_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    csv_path.with_file_name(format!("{stem}.meta.json"))
}

/// Writes `<name>.csv` and `<name>.meta.json` side by side.
pub fn write_store(table: &FeatureTable, csv_path: &Path, prov: &Provenance) -> Result<()> {
    write_text(csv_path, &store_csv(table, prov)?)?;
    let meta = serde_json::to_value(store_meta(table))?;
    write_json(&meta_path(csv_path), prov, meta)
}

pub fn read_store(csv_path: &Path) -> Result<FeatureTable> {
    let mpath = meta_path(csv_path);
    let meta_text = fs::read_to_string(&mpath).map_err(|e| Error::io(&mpath, e))?;
    let meta: StoreMeta = serde_json::from_str(&meta_text)?;
    let text = fs::read_to_string(csv_path).map_err(|e| Error::io(csv_path, e))?;
    let err = |line: usize, message: String| Error::Parse {
        file: csv_path.to_path_buf(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    if headers.get(0) != Some("date") {
        return Err(err(1, "first column must be `date`".into()));
    }
    let mut columns = Vec::new();
    for h in headers.iter().skip(1) {
        let (tag, name) = h
            .split_once(':')
            .ok_or_else(|| err(1, format!("header `{h}` is not DIM:name")))?;
        let dimension: Dimension = tag.parse().map_err(|e: Error| err(1, e.to_string()))?;
        let unit = meta
            .columns
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.unit.clone())
            .unwrap_or_else(|| "unknown".to_string());
        columns.push(Column::new(name, dimension, unit));
    }
    let mut dates = Vec::new();
    let mut data = vec![Vec::new(); columns.len()];
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let date: NaiveDate = rec[0]
            .parse()
            .map_err(|_| err(line, format!("bad date `{}`", &rec[0])))?;
        dates.push(date);
        for (c, cell) in data.iter_mut().zip(rec.iter().skip(1)) {
            c.push(if is_missing_marker(cell) {
                f64::NAN
            } else {
                cell.parse().map_err(|_| err(line, format!("bad number `{cell}`")))?
            });
        }
    }
    FeatureTable::new(dates, columns, data, meta.target)
}
