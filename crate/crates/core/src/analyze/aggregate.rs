use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::stdb::{Column, Dimension, FeatureTable};

/// Per-row dimension scores: the mean of each dimension's min-max-normalized
/// member features. Returns a table with columns `G`, `A`, `I`, `S` plus the
/// original target; load-tagged features are ignored.
pub fn dimension_aggregate(table: &FeatureTable) -> Result<FeatureTable> {
    if !table.is_complete() {
        return Err(Error::invalid("dimension aggregation needs a complete table"));
    }
    let mut members: BTreeMap<Dimension, Vec<&[f64]>> = BTreeMap::new();
    for (c, values) in table.feature_columns() {
        if c.dimension == Dimension::L {
            continue;
        }
        let (lo, hi) = crate::stats::min_max(values);
        if hi <= lo {
            return Err(Error::invalid(format!(
                "zero range in min-max for `{}`; drop constant features before aggregating",
                c.name
            )));
        }
        members.entry(c.dimension).or_default().push(values);
    }
    let n = table.n_rows();
    let target_col = table
        .columns()
        .iter()
        .find(|c| c.name == table.target())
        .expect("target exists")
        .clone();
    let mut columns = vec![target_col];
    let mut data = vec![table.target_values().to_vec()];
    for dim in Dimension::EXOGENOUS {
        let cols = members
            .get(&dim)
            .ok_or_else(|| Error::invalid(format!("dimension {dim} has no features to aggregate")))?;
        let mut agg = vec![0.0; n];
        for values in cols {
            let (lo, hi) = crate::stats::min_max(values);
            for (a, v) in agg.iter_mut().zip(values.iter()) {
                *a += (v - lo) / (hi - lo);
            }
        }
        for a in agg.iter_mut() {
            *a /= cols.len() as f64;
        }
        columns.push(Column::new(dim.tag(), dim, "normalized"));
        data.push(agg);
    }
    FeatureTable::new(table.dates().to_vec(), columns, data, table.target())
}
