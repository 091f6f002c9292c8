//! Shapley attribution over column groups.
//!
//! A coalition's value for one row is the model prediction with every column
//! outside the coalition replaced by its mean over the reference table. The
//! empty coalition therefore predicts at the mean row, which is the baseline,
//! and the full coalition predicts the row itself.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::artifact::{csv_string, fmt_f64, Provenance};
use crate::error::{Error, Result};
use crate::models::TrainedModel;
use crate::stdb::{Dimension, FeatureTable};

pub const MAX_EXACT_GROUPS: usize = 8;

/// Named set of column positions in the model's column order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Group {
    pub name: String,
    pub columns: Vec<usize>,
}

/// One group per dimension present among the model's columns, in
/// G, A, I, S, L order.
pub fn dimension_groups(model: &TrainedModel) -> Vec<Group> {
    let mut by_dim: BTreeMap<Dimension, Vec<usize>> = BTreeMap::new();
    for (j, c) in model.columns.iter().enumerate() {
        by_dim.entry(c.dimension).or_default().push(j);
    }
    by_dim
        .into_iter()
        .map(|(d, columns)| Group { name: d.tag().to_string(), columns })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimensionAttribution {
    pub groups: Vec<String>,
    /// Row indices into the explained table.
    pub samples: Vec<usize>,
    /// `values[s][g]`: attribution of group `g` for sample `s`.
    pub values: Vec<Vec<f64>>,
    /// Mean over the group's columns of the min-max-normalized input value,
    /// per sample and group; used to colour beeswarm points.
    pub group_levels: Vec<Vec<f64>>,
    pub baseline: f64,
    pub predictions: Vec<f64>,
    pub mean_abs: Vec<f64>,
    pub positive_fraction: Vec<f64>,
}

impl DimensionAttribution {
    fn summarize(&mut self) {
        let n = self.values.len().max(1) as f64;
        let g = self.groups.len();
        self.mean_abs = (0..g).map(|k| self.values.iter().map(|v| v[k].abs()).sum::<f64>() / n).collect();
        self.positive_fraction =
            (0..g).map(|k| self.values.iter().filter(|v| v[k] > 0.0).count() as f64 / n).collect();
    }

    /// Group names by mean |attribution|, largest first; ties by name.
    pub fn ranking(&self) -> Vec<(String, f64)> {
        let mut r: Vec<(String, f64)> = self.groups.iter().cloned().zip(self.mean_abs.iter().copied()).collect();
        r.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        r
    }

    /// Wide layout: one row per sample, one column per group.
    pub fn to_csv(&self, table: &FeatureTable, prov: &Provenance) -> Result<String> {
        csv_string(prov, |w| {
            let mut header = vec!["sample".to_string(), "date".to_string()];
            header.extend(self.groups.iter().cloned());
            header.extend(["prediction".to_string(), "baseline".to_string()]);
            w.write_record(&header)?;
            for (s, &row) in self.samples.iter().enumerate() {
                let mut rec = vec![row.to_string(), table.dates().get(row).map_or(String::new(), |d| d.to_string())];
                rec.extend(self.values[s].iter().map(|v| fmt_f64(*v)));
                rec.push(fmt_f64(self.predictions[s]));
                rec.push(fmt_f64(self.baseline));
                w.write_record(&rec)?;
            }
            Ok(())
        })
    }

    pub fn summary_json(&self) -> serde_json::Value {
        let ranking: Vec<serde_json::Value> = self
            .ranking()
            .into_iter()
            .map(|(g, v)| {
                let k = self.groups.iter().position(|x| *x == g).unwrap();
                serde_json::json!({
                    "group": g,
                    "mean_abs": v,
                    "positive_fraction": self.positive_fraction[k],
                })
            })
            .collect();
        serde_json::json!({
            "baseline": self.baseline,
            "samples": self.samples.len(),
            "ranking": ranking,
        })
    }
}

fn check(model: &TrainedModel, table: &FeatureTable, samples: &[usize], groups: &[Group]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let names = model.feature_names();
    let rows = table.rows_of(&names)?;
    if let Some(&bad) = samples.iter().find(|&&s| s >= rows.len()) {
        return Err(Error::invalid(format!("sample index {bad} is outside the {}-row table", rows.len())));
    }
    let mut seen = vec![false; names.len()];
    for g in groups {
        for &c in &g.columns {
            if c >= names.len() || seen[c] {
                return Err(Error::invalid(format!("group `{}` has an invalid or repeated column", g.name)));
            }
            seen[c] = true;
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::invalid("groups must cover every model column"));
    }
    let n = rows.len() as f64;
    let means: Vec<f64> = (0..names.len()).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    Ok((means, rows))
}

fn levels(rows: &[Vec<f64>], samples: &[usize], groups: &[Group]) -> Vec<Vec<f64>> {
    let p = rows.first().map_or(0, Vec::len);
    let mut lo = vec![f64::INFINITY; p];
    let mut hi = vec![f64::NEG_INFINITY; p];
    for r in rows {
        for j in 0..p {
            lo[j] = lo[j].min(r[j]);
            hi[j] = hi[j].max(r[j]);
        }
    }
    samples
        .iter()
        .map(|&s| {
            groups
                .iter()
                .map(|g| {
                    let sum: f64 = g
                        .columns
                        .iter()
                        .map(|&j| if hi[j] > lo[j] { (rows[s][j] - lo[j]) / (hi[j] - lo[j]) } else { 0.5 })
                        .sum();
                    sum / g.columns.len().max(1) as f64
                })
                .collect()
        })
        .collect()
}

fn coalition_row(row: &[f64], means: &[f64], groups: &[Group], mask: usize) -> Vec<f64> {
    let mut out = means.to_vec();
    for (k, g) in groups.iter().enumerate() {
        if mask >> k & 1 == 1 {
            for &j in &g.columns {
                out[j] = row[j];
            }
        }
    }
    out
}

/// Exact group Shapley values by enumerating every coalition, weighted by
/// the number of orderings in which it precedes the group.
pub fn shapley_exact(model: &TrainedModel, table: &FeatureTable, samples: &[usize], groups: &[Group]) -> Result<DimensionAttribution> {
    let g = groups.len();
    if g == 0 {
        return Err(Error::invalid("no groups to attribute"));
    }
    if g > MAX_EXACT_GROUPS {
        return Err(Error::invalid(format!(
            "{g} groups exceed the exact limit of {MAX_EXACT_GROUPS}; use sampling variant"
        )));
    }
    let (means, rows) = check(model, table, samples, groups)?;
    let baseline = model.predict_rows(std::slice::from_ref(&means))[0];
    let masks = 1usize << g;
    // weight[s] = s! (g - s - 1)! / g!
    let fact = |k: usize| (1..=k).map(|v| v as f64).product::<f64>();
    let weight: Vec<f64> = (0..g).map(|s| fact(s) * fact(g - s - 1) / fact(g)).collect();

    let eval_sample = |&s: &usize| -> (Vec<f64>, f64) {
        let batch: Vec<Vec<f64>> = (0..masks).map(|m| coalition_row(&rows[s], &means, groups, m)).collect();
        let mut v = model.predict_rows(&batch);
        // The empty coalition is the baseline by definition; pin it so the
        // efficiency identity does not depend on re-evaluation.
        v[0] = baseline;
        let phi: Vec<f64> = (0..g)
            .map(|k| {
                let bit = 1 << k;
                let mut acc = 0.0;
                for m in 0..masks {
                    if m & bit == 0 {
                        acc += weight[(m as u32).count_ones() as usize] * (v[m | bit] - v[m]);
                    }
                }
                acc
            })
            .collect();
        (phi, v[masks - 1])
    };
    #[cfg(feature = "parallel")]
    let per: Vec<(Vec<f64>, f64)> = {
        use rayon::prelude::*;
        samples.par_iter().map(eval_sample).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let per: Vec<(Vec<f64>, f64)> = samples.iter().map(eval_sample).collect();

    let (values, predictions) = per.into_iter().unzip();
    let mut out = DimensionAttribution {
        groups: groups.iter().map(|x| x.name.clone()).collect(),
        samples: samples.to_vec(),
        values,
        group_levels: levels(&rows, samples, groups),
        baseline,
        predictions,
        mean_abs: Vec::new(),
        positive_fraction: Vec::new(),
    };
    out.summarize();
    Ok(out)
}

/// Monte Carlo group Shapley: average marginal contributions along
/// `n_perm` seeded random orderings (shared across samples).
pub fn shapley_sampled(
    model: &TrainedModel,
    table: &FeatureTable,
    samples: &[usize],
    groups: &[Group],
    n_perm: usize,
    seed: u64,
) -> Result<DimensionAttribution> {
    let g = groups.len();
    if g == 0 || n_perm == 0 {
        return Err(Error::invalid("need at least one group and one permutation"));
    }
    let (means, rows) = check(model, table, samples, groups)?;
    let baseline = model.predict_rows(std::slice::from_ref(&means))[0];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let perms: Vec<Vec<usize>> = (0..n_perm)
        .map(|_| {
            let mut p: Vec<usize> = (0..g).collect();
            p.shuffle(&mut rng);
            p
        })
        .collect();
    let eval_sample = |&s: &usize| -> (Vec<f64>, f64) {
        let mut phi = vec![0.0; g];
        for perm in &perms {
            let mut batch = Vec::with_capacity(g);
            let mut mask = 0usize;
            let mut cur = means.clone();
            for &k in perm {
                mask |= 1 << k;
                for &j in &groups[k].columns {
                    cur[j] = rows[s][j];
                }
                batch.push(cur.clone());
            }
            debug_assert_eq!(mask.count_ones() as usize, g);
            let v = model.predict_rows(&batch);
            let mut prev = baseline;
            for (step, &k) in perm.iter().enumerate() {
                phi[k] += v[step] - prev;
                prev = v[step];
            }
        }
        for p in phi.iter_mut() {
            *p /= n_perm as f64;
        }
        let full = model.predict_rows(std::slice::from_ref(&rows[s]))[0];
        (phi, full)
    };
    #[cfg(feature = "parallel")]
    let per: Vec<(Vec<f64>, f64)> = {
        use rayon::prelude::*;
        samples.par_iter().map(eval_sample).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let per: Vec<(Vec<f64>, f64)> = samples.iter().map(eval_sample).collect();
    let (values, predictions) = per.into_iter().unzip();
    let mut out = DimensionAttribution {
        groups: groups.iter().map(|x| x.name.clone()).collect(),
        samples: samples.to_vec(),
        values,
        group_levels: levels(&rows, samples, groups),
        baseline,
        predictions,
        mean_abs: Vec::new(),
        positive_fraction: Vec::new(),
    };
    out.summarize();
    Ok(out)
}

/// Exact attribution with one group per dimension.
pub fn grouped_shapley(model: &TrainedModel, table: &FeatureTable, samples: &[usize]) -> Result<DimensionAttribution> {
    shapley_exact(model, table, samples, &dimension_groups(model))
}

/// `count` distinct row indices drawn without replacement, sorted.
pub fn sample_rows(n_rows: usize, count: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n_rows).collect();
    if count < n_rows {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        idx.shuffle(&mut rng);
        idx.truncate(count);
        idx.sort_unstable();
    }
    idx
}
