use crate::artifact::{csv_string, fmt_f64, Provenance};
use crate::error::{Error, Result};
use crate::identify::DimensionAttribution;
use crate::svg::{self, StripPoint};

/// Long-format attribution table and a seeded strip plot. Point colour is
/// the group's normalized input level for that sample.
pub fn beeswarm_export(att: &DimensionAttribution, seed: u64, prov: &Provenance) -> Result<(String, String)> {
    if att.values.is_empty() || att.groups.is_empty() {
        return Err(Error::invalid("empty attribution matrix"));
    }
    let csv = csv_string(prov, |w| {
        w.write_record(["sample", "name", "value", "feature_value"])?;
        for (s, row) in att.samples.iter().enumerate() {
            for (g, name) in att.groups.iter().enumerate() {
                w.write_record([
                    row.to_string(),
                    name.clone(),
                    fmt_f64(att.values[s][g]),
                    fmt_f64(att.group_levels[s][g]),
                ])?;
            }
        }
        Ok(())
    })?;
    let mut points = Vec::with_capacity(att.values.len() * att.groups.len());
    for (s, vals) in att.values.iter().enumerate() {
        for (g, v) in vals.iter().enumerate() {
            points.push(StripPoint { row: g, value: *v, shade: att.group_levels[s][g] });
        }
    }
    let svg = svg::strip_plot("Attribution by dimension", "attribution (load units)", &att.groups, &points, seed, prov);
    Ok((csv, svg))
}
