#![allow(dead_code)]

use chrono::NaiveDate;
use loadfeat_core::stdb::{Column, Dimension, FeatureTable};

pub fn day(s: &str) -> NaiveDate {
    s.parse().unwrap()
}

/// Daily table starting 2020-01-01; the first entry is the target.
pub fn table(cols: Vec<(&str, Dimension, Vec<f64>)>) -> FeatureTable {
    let n = cols[0].2.len();
    let target = cols[0].0.to_string();
    let dates: Vec<NaiveDate> = day("2020-01-01").iter_days().take(n).collect();
    let (columns, data): (Vec<Column>, Vec<Vec<f64>>) =
        cols.into_iter().map(|(name, d, v)| (Column::new(name, d, "u"), v)).unzip();
    FeatureTable::new(dates, columns, data, &target).unwrap()
}
