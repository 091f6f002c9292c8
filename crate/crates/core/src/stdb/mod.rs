//! The four-dimensional feature store.
//!
//! Per-feature series are ingested from CSV, aligned onto the target's daily
//! calendar (monthly series are linearly spread over days first), imputed,
//! and extended with lagged load and calendar columns. Everything downstream
//! works on the resulting [`FeatureTable`].

mod impute;
mod io;
pub mod synth;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, Months, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use impute::{impute, impute_with, ImputeOptions, IMPUTE_CHAINS, OBSERVED_FLOOR};
pub use io::{
    ingest, parse_series_csv, read_manifest, read_store, series_csv, store_csv, store_meta,
    write_store, ManifestEntry, StoreMeta,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Dimension {
    /// Geography: weather and terrain.
    G,
    /// Astronomy: solar position and irradiance.
    A,
    /// Integrated energy: fuel prices and consumption.
    I,
    /// Society: calendar, economy, population.
    S,
    /// Historical load.
    L,
}

impl Dimension {
    pub const ALL: [Dimension; 5] = [Dimension::G, Dimension::A, Dimension::I, Dimension::S, Dimension::L];
    /// The four candidate dimensions, excluding historical load.
    pub const EXOGENOUS: [Dimension; 4] = [Dimension::G, Dimension::A, Dimension::I, Dimension::S];

    pub fn tag(self) -> &'static str {
        match self {
            Dimension::G => "G",
            Dimension::A => "A",
            Dimension::I => "I",
            Dimension::S => "S",
            Dimension::L => "L",
        }
    }

    pub fn long_name(self) -> &'static str {
        match self {
            Dimension::G => "geography",
            Dimension::A => "astronomy",
            Dimension::I => "integrated_energy",
            Dimension::S => "society",
            Dimension::L => "load",
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Dimension {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        Dimension::ALL
            .into_iter()
            .find(|d| lower == d.tag().to_ascii_lowercase() || lower == d.long_name())
            .ok_or_else(|| Error::invalid(format!("unknown dimension tag `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cadence {
    Daily,
    Monthly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSeries {
    pub name: String,
    pub dimension: Dimension,
    pub unit: String,
    pub cadence: Cadence,
    /// Strictly increasing. Monthly series sit on the first of each month.
    pub dates: Vec<NaiveDate>,
    pub values: Vec<Option<f64>>,
}

impl FeatureSeries {
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.unit.trim().is_empty() {
            return Err(Error::invalid(format!("series `{}` has an empty unit", self.name)));
        }
        if self.dates.len() != self.values.len() {
            return Err(Error::invalid(format!("series `{}` is ragged", self.name)));
        }
        if self.dates.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid(format!("series `{}`: non-monotone dates", self.name)));
        }
        if self.cadence == Cadence::Monthly && self.dates.iter().any(|d| d.day() != 1) {
            return Err(Error::invalid(format!(
                "monthly series `{}` must sit on the first of each month",
                self.name
            )));
        }
        Ok(())
    }
}

/// Spreads a monthly series over days. Each month's value sits on its first
/// day and days between two observed anchors are linearly interpolated;
/// days after the last anchor, through the end of its month, repeat it.
pub fn monthly_to_daily(series: &FeatureSeries) -> Result<FeatureSeries> {
    if series.cadence != Cadence::Monthly {
        return Err(Error::invalid(format!("`{}` is not a monthly series", series.name)));
    }
    series.validate()?;
    let anchors: Vec<(NaiveDate, f64)> = series
        .dates
        .iter()
        .zip(&series.values)
        .filter_map(|(d, v)| v.map(|v| (*d, v)))
        .collect();
    if anchors.len() < 2 {
        return Err(Error::invalid(format!(
            "cannot interpolate `{}`: needs at least two observed months",
            series.name
        )));
    }
    let first = series.dates[0];
    let last_month = *series.dates.last().unwrap();
    let end = last_month + Months::new(1);
    let mut dates = Vec::new();
    let mut values = Vec::new();
    let mut seg = 0;
    let mut day = first;
    while day < end {
        while seg + 1 < anchors.len() && day >= anchors[seg + 1].0 {
            seg += 1;
        }
        let value = if day < anchors[0].0 {
            None
        } else if seg + 1 == anchors.len() {
            Some(anchors[seg].1)
        } else {
            let (d0, v0) = anchors[seg];
            let (d1, v1) = anchors[seg + 1];
            let frac = (day - d0).num_days() as f64 / (d1 - d0).num_days() as f64;
            Some(v0 + frac * (v1 - v0))
        };
        dates.push(day);
        values.push(value);
        day = day.succ_opt().expect("date in range");
    }
    Ok(FeatureSeries {
        name: series.name.clone(),
        dimension: series.dimension,
        unit: series.unit.clone(),
        cadence: Cadence::Daily,
        dates,
        values,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub dimension: Dimension,
    pub unit: String,
}

impl Column {
    pub fn new(name: impl Into<String>, dimension: Dimension, unit: impl Into<String>) -> Self {
        Column {
            name: name.into(),
            dimension,
            unit: unit.into(),
        }
    }
}

/// Date-indexed, column-major feature matrix. Missing cells are NaN until
/// imputation. The target is one of the columns and is tagged `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    dates: Vec<NaiveDate>,
    columns: Vec<Column>,
    data: Vec<Vec<f64>>,
    target: String,
}

impl FeatureTable {
    pub fn new(
        dates: Vec<NaiveDate>,
        columns: Vec<Column>,
        data: Vec<Vec<f64>>,
        target: impl Into<String>,
    ) -> Result<Self> {
        let target = target.into();
        if columns.len() != data.len() {
            return Err(Error::invalid("column count does not match data"));
        }
        if data.iter().any(|c| c.len() != dates.len()) {
            return Err(Error::invalid("table is not rectangular"));
        }
        if dates.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("table dates are not strictly increasing"));
        }
        let mut seen = HashSet::new();
        for c in &columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::invalid(format!("duplicate feature name `{}`", c.name)));
            }
        }
        match columns.iter().find(|c| c.name == target) {
            None => return Err(Error::invalid(format!("target `{target}` is not a column"))),
            Some(c) if c.dimension != Dimension::L => {
                return Err(Error::invalid(format!("target `{target}` must have dimension L")))
            }
            _ => {}
        }
        Ok(FeatureTable {
            dates,
            columns,
            data,
            target,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.dates.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn data(&self) -> &[Vec<f64>] {
        &self.data
    }

    pub fn target(&self) -> &str {
        &self.target
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.column_index(name)
            .map(|i| self.data[i].as_slice())
            .ok_or_else(|| Error::UnknownFeature(name.to_string()))
    }

    pub fn target_values(&self) -> &[f64] {
        self.column(&self.target).expect("target validated at construction")
    }

    /// Every column except the target, in table order.
    pub fn feature_columns(&self) -> impl Iterator<Item = (&Column, &[f64])> {
        self.columns
            .iter()
            .zip(&self.data)
            .filter(|(c, _)| c.name != self.target)
            .map(|(c, d)| (c, d.as_slice()))
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.feature_columns().map(|(c, _)| c.name.clone()).collect()
    }

    pub fn missing_count(&self) -> usize {
        self.data.iter().flatten().filter(|x| x.is_nan()).count()
    }

    pub fn is_complete(&self) -> bool {
        self.missing_count() == 0
    }

    /// Row-major matrix of the named columns.
    pub fn rows_of(&self, names: &[String]) -> Result<Vec<Vec<f64>>> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| self.column_index(n).ok_or_else(|| Error::UnknownFeature(n.clone())))
            .collect::<Result<_>>()?;
        Ok((0..self.n_rows())
            .map(|r| idx.iter().map(|&c| self.data[c][r]).collect())
            .collect())
    }

    pub(crate) fn data_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.data
    }

    fn select_rows(&self, keep: impl Fn(usize, NaiveDate) -> bool) -> FeatureTable {
        let rows: Vec<usize> = (0..self.n_rows()).filter(|&r| keep(r, self.dates[r])).collect();
        FeatureTable {
            dates: rows.iter().map(|&r| self.dates[r]).collect(),
            columns: self.columns.clone(),
            data: self
                .data
                .iter()
                .map(|c| rows.iter().map(|&r| c[r]).collect())
                .collect(),
            target: self.target.clone(),
        }
    }

    /// Keeps the named columns (plus the target) in table order.
    pub fn select_columns(&self, names: &[String]) -> Result<FeatureTable> {
        for n in names {
            if self.column_index(n).is_none() {
                return Err(Error::UnknownFeature(n.clone()));
            }
        }
        let wanted: HashSet<&str> = names.iter().map(String::as_str).collect();
        let (columns, data) = self
            .columns
            .iter()
            .zip(&self.data)
            .filter(|(c, _)| c.name == self.target || wanted.contains(c.name.as_str()))
            .map(|(c, d)| (c.clone(), d.clone()))
            .unzip();
        Ok(FeatureTable {
            dates: self.dates.clone(),
            columns,
            data,
            target: self.target.clone(),
        })
    }

    pub fn push_column(&mut self, column: Column, values: Vec<f64>) -> Result<()> {
        if values.len() != self.n_rows() {
            return Err(Error::invalid(format!("column `{}` has the wrong length", column.name)));
        }
        if self.column_index(&column.name).is_some() {
            return Err(Error::invalid(format!("duplicate feature name `{}`", column.name)));
        }
        self.columns.push(column);
        self.data.push(values);
        Ok(())
    }

    /// Drops feature columns; the target cannot be dropped.
    pub fn drop_columns(&self, names: &[String]) -> FeatureTable {
        let drop: HashSet<&str> = names.iter().map(String::as_str).collect();
        let keep: Vec<String> = self
            .feature_names()
            .into_iter()
            .filter(|n| !drop.contains(n.as_str()))
            .collect();
        self.select_columns(&keep).expect("names come from the table")
    }

    pub fn count_by_dimension(&self) -> BTreeMap<Dimension, usize> {
        let mut m = BTreeMap::new();
        for (c, _) in self.feature_columns() {
            *m.entry(c.dimension).or_default() += 1;
        }
        m
    }
}

/// Aligns series onto the target's daily calendar, from its first to its
/// last date. Monthly series are spread over days first. Dates a series does
/// not cover become missing.
pub fn assemble(series: &[FeatureSeries], target: &str) -> Result<FeatureTable> {
    let mut names = HashSet::new();
    for s in series {
        if !names.insert(s.name.as_str()) {
            return Err(Error::invalid(format!("duplicate feature name `{}`", s.name)));
        }
    }
    let tgt = series
        .iter()
        .find(|s| s.name == target)
        .ok_or_else(|| Error::UnknownFeature(target.to_string()))?;
    if tgt.dimension != Dimension::L || tgt.cadence != Cadence::Daily {
        return Err(Error::invalid(format!("target `{target}` must be a daily L series")));
    }
    if tgt.is_empty() {
        return Err(Error::invalid("target series is empty"));
    }
    let start = tgt.dates[0];
    let end = *tgt.dates.last().unwrap();
    let dates: Vec<NaiveDate> = start.iter_days().take_while(|d| *d <= end).collect();

    let ordered = std::iter::once(tgt).chain(series.iter().filter(|s| s.name != target));
    let mut columns = Vec::new();
    let mut data = Vec::new();
    for s in ordered {
        let daily;
        let s = match s.cadence {
            Cadence::Monthly => {
                daily = monthly_to_daily(s)?;
                &daily
            }
            Cadence::Daily => s,
        };
        let lookup: BTreeMap<NaiveDate, Option<f64>> =
            s.dates.iter().copied().zip(s.values.iter().copied()).collect();
        columns.push(Column::new(&s.name, s.dimension, &s.unit));
        data.push(
            dates
                .iter()
                .map(|d| lookup.get(d).copied().flatten().unwrap_or(f64::NAN))
                .collect(),
        );
    }
    FeatureTable::new(dates, columns, data, target)
}

pub fn lag_name(source: &str, lag: usize) -> String {
    format!("{source}_lag_{lag}")
}

/// Appends `source_lag_k` columns (same dimension as `source`) and drops the
/// first `max(lags)` rows so no lagged cell is missing.
pub fn add_lag_features(table: &FeatureTable, source: &str, lags: &[usize]) -> Result<FeatureTable> {
    if lags.is_empty() {
        return Ok(table.clone());
    }
    let idx = table
        .column_index(source)
        .ok_or_else(|| Error::UnknownFeature(source.to_string()))?;
    if lags.contains(&0) {
        return Err(Error::invalid("lags must be positive"));
    }
    let max_lag = *lags.iter().max().unwrap();
    if max_lag >= table.n_rows() {
        return Err(Error::invalid(format!(
            "lag {max_lag} is not shorter than the {}-row series",
            table.n_rows()
        )));
    }
    let mut out = table.clone();
    let src = table.data[idx].clone();
    let col = &table.columns[idx];
    for &k in lags {
        let mut values = vec![f64::NAN; k];
        values.extend_from_slice(&src[..src.len() - k]);
        out.push_column(Column::new(lag_name(source, k), col.dimension, &col.unit), values)?;
    }
    Ok(out.select_rows(|r, _| r >= max_lag))
}

pub const CALENDAR_COLUMNS: [&str; 9] = [
    "date_dow_mon",
    "date_dow_tue",
    "date_dow_wed",
    "date_dow_thu",
    "date_dow_fri",
    "date_dow_sat",
    "date_dow_sun",
    "date_doy_sin",
    "date_doy_cos",
];

/// The date coefficient: day-of-week one-hot plus a day-of-year sine/cosine
/// pair, all tagged as society features.
pub fn add_calendar_features(table: &FeatureTable) -> Result<FeatureTable> {
    let mut out = table.clone();
    let dates = table.dates();
    for (dow, name) in CALENDAR_COLUMNS[..7].iter().enumerate() {
        let values = dates
            .iter()
            .map(|d| (d.weekday().num_days_from_monday() as usize == dow) as u8 as f64)
            .collect();
        out.push_column(Column::new(*name, Dimension::S, "indicator"), values)?;
    }
    let phase = |d: &NaiveDate| {
        let len = if d.leap_year() { 366.0 } else { 365.0 };
        2.0 * std::f64::consts::PI * (d.ordinal0() as f64) / len
    };
    out.push_column(
        Column::new(CALENDAR_COLUMNS[7], Dimension::S, "unitless"),
        dates.iter().map(|d| phase(d).sin()).collect(),
    )?;
    out.push_column(
        Column::new(CALENDAR_COLUMNS[8], Dimension::S, "unitless"),
        dates.iter().map(|d| phase(d).cos()).collect(),
    )?;
    Ok(out)
}

/// Inclusive date range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateRange {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Self {
        DateRange { start, end }
    }

    pub fn contains(&self, d: NaiveDate) -> bool {
        self.start <= d && d <= self.end
    }
}

/// Row partition into train and test tables.
pub fn split(table: &FeatureTable, train: DateRange, test: DateRange) -> Result<(FeatureTable, FeatureTable)> {
    if train.start > train.end || test.start > test.end {
        return Err(Error::invalid("date range ends before it starts"));
    }
    if test.start <= train.end {
        return Err(Error::invalid("test range must start after the train range ends"));
    }
    let tr = table.select_rows(|_, d| train.contains(d));
    let te = table.select_rows(|_, d| test.contains(d));
    if tr.n_rows() == 0 {
        return Err(Error::invalid("empty train"));
    }
    if te.n_rows() == 0 {
        return Err(Error::invalid("empty test"));
    }
    Ok((tr, te))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeSpec {
    pub id: String,
    pub included: Vec<String>,
}

/// Column subset for one feature scheme; target and dates are kept.
pub fn build_scheme(table: &FeatureTable, spec: &SchemeSpec) -> Result<FeatureTable> {
    table.select_columns(&spec.included)
}
