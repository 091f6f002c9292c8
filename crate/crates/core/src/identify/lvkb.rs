//! Low-variance elimination followed by univariate F-score selection.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::artifact::{csv_string, fmt_f64, Provenance};
use crate::error::{Error, Result};
use crate::stats;
use crate::stdb::{Dimension, FeatureTable};

pub const DEFAULT_VARIANCE_THRESHOLD: f64 = 0.88;
pub const DEFAULT_KBEST_THRESHOLD: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureScore {
    pub name: String,
    pub dimension: Dimension,
    /// Population variance in raw units.
    pub variance: f64,
    /// Pearson r against the target; NaN until scored.
    pub r: f64,
    /// F statistic; `+inf` when |r| = 1; NaN until scored.
    pub f: f64,
    pub passed_variance: bool,
    pub passed_kbest: bool,
}

/// How the second stage keeps features.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// Keep every feature with `f >= threshold`.
    Threshold(f64),
    /// Keep the `k` highest-scoring features.
    TopK(usize),
}

impl Selection {
    pub fn describe(&self) -> String {
        match self {
            Selection::Threshold(t) => format!("f>={t}"),
            Selection::TopK(k) => format!("top{k}"),
        }
    }
}

pub fn variance_filter(table: &FeatureTable, threshold: f64) -> Vec<FeatureScore> {
    table
        .feature_columns()
        .map(|(c, values)| {
            let variance = stats::variance(values);
            FeatureScore {
                name: c.name.clone(),
                dimension: c.dimension,
                variance,
                r: f64::NAN,
                f: f64::NAN,
                passed_variance: variance >= threshold,
                passed_kbest: false,
            }
        })
        .collect()
}

/// Pearson `r` and `f = r^2 / (1 - r^2) * (n - 2)` with `n` the sample count.
pub fn f_score(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() {
        return Err(Error::invalid("f_score inputs differ in length"));
    }
    if x.len() < 3 {
        return Err(Error::invalid("f_score needs at least 3 samples"));
    }
    let r = stats::pearson(x, y).ok_or(Error::ZeroVariance)?;
    let r2 = r * r;
    let f = if 1.0 - r2 <= f64::EPSILON {
        f64::INFINITY
    } else {
        r2 / (1.0 - r2) * (x.len() as f64 - 2.0)
    };
    Ok((r, f))
}

/// Scores every variance-passing column and marks the selected ones. The
/// result lists scored features by `f` descending (ties by name), then the
/// variance-rejected ones by name.
pub fn select_features(scores: Vec<FeatureScore>, table: &FeatureTable, selection: Selection) -> Result<Vec<FeatureScore>> {
    let y = table.target_values();
    if stats::pearson(y, y).is_none() {
        return Err(Error::ZeroVariance);
    }
    let score_one = |mut s: FeatureScore| -> Result<FeatureScore> {
        if s.passed_variance {
            let x = table.column(&s.name)?;
            match f_score(x, y) {
                Ok((r, f)) => {
                    s.r = r;
                    s.f = f;
                }
                // A constant column only survives a zero threshold; it carries no signal.
                Err(Error::ZeroVariance) => {
                    s.r = 0.0;
                    s.f = 0.0;
                }
                Err(e) => return Err(e),
            }
        }
        Ok(s)
    };
    #[cfg(feature = "parallel")]
    let mut scored: Vec<FeatureScore> = {
        use rayon::prelude::*;
        scores.into_par_iter().map(score_one).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let mut scored: Vec<FeatureScore> = scores.into_iter().map(score_one).collect::<Result<_>>()?;

    scored.sort_by(|a, b| match (a.passed_variance, b.passed_variance) {
        (true, true) => b.f.total_cmp(&a.f).then_with(|| a.name.cmp(&b.name)),
        (true, false) => std::cmp::Ordering::Less,
        (false, true) => std::cmp::Ordering::Greater,
        (false, false) => a.name.cmp(&b.name),
    });
    let mut rank = 0;
    for s in scored.iter_mut().filter(|s| s.passed_variance) {
        s.passed_kbest = match selection {
            Selection::Threshold(t) => s.f >= t,
            Selection::TopK(k) => rank < k,
        };
        rank += 1;
    }
    Ok(scored)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LvkbResult {
    pub scores: Vec<FeatureScore>,
    /// Kept names in score order.
    pub identified: Vec<String>,
    pub counts: BTreeMap<Dimension, usize>,
    pub variance_threshold: f64,
    pub selection: Selection,
}

pub fn lvkb(table: &FeatureTable, variance_threshold: f64, selection: Selection) -> Result<LvkbResult> {
    if !table.is_complete() {
        return Err(Error::invalid("identification needs a complete table; impute first"));
    }
    let scores = select_features(variance_filter(table, variance_threshold), table, selection)?;
    let identified: Vec<String> = scores.iter().filter(|s| s.passed_kbest).map(|s| s.name.clone()).collect();
    let mut counts: BTreeMap<Dimension, usize> = Dimension::EXOGENOUS.iter().map(|d| (*d, 0)).collect();
    for s in scores.iter().filter(|s| s.passed_kbest) {
        *counts.entry(s.dimension).or_default() += 1;
    }
    Ok(LvkbResult { scores, identified, counts, variance_threshold, selection })
}

impl LvkbResult {
    pub fn provenance(&self, prov: &Provenance) -> Provenance {
        prov.clone()
            .with("variance_threshold", self.variance_threshold)
            .with("kbest", self.selection.describe())
    }

    /// `name,dimension,variance,r,f,kept`. Unscored cells are empty.
    pub fn scores_csv(&self, prov: &Provenance) -> Result<String> {
        csv_string(&self.provenance(prov), |w| {
            w.write_record(["name", "dimension", "variance", "r", "f", "kept"])?;
            for s in &self.scores {
                w.write_record([
                    s.name.clone(),
                    s.dimension.tag().to_string(),
                    fmt_f64(s.variance),
                    fmt_f64(s.r),
                    fmt_f64(s.f),
                    if s.passed_kbest { "yes" } else { "no" }.to_string(),
                ])?;
            }
            Ok(())
        })
    }

    pub fn counts_json(&self) -> serde_json::Value {
        let counts: serde_json::Map<String, serde_json::Value> = self
            .counts
            .iter()
            .map(|(d, c)| (d.tag().to_string(), serde_json::Value::from(*c)))
            .collect();
        serde_json::json!({
            "total": self.identified.len(),
            "counts": counts,
            "identified": self.identified,
            "variance_threshold": self.variance_threshold,
            "kbest": self.selection,
        })
    }
}
