use serde::Serialize;

use super::{evaluate, fit, Metrics, ModelSpec};
use crate::artifact::{csv_string, fmt_f64, Provenance};
use crate::error::{Error, Result};
use crate::stdb::{build_scheme, split, DateRange, FeatureTable, SchemeSpec};
use crate::svg;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub scheme: String,
    pub model: String,
    pub features: usize,
    pub metrics: Metrics,
    /// Relative MAPE change against the first scheme, in percent.
    pub delta_vs_first: f64,
    /// Relative MAPE change against the best scheme other than the last.
    pub delta_vs_best_prior: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub schemes: Vec<String>,
    pub models: Vec<String>,
    /// Scheme-major: all models of the first scheme, then the next.
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonReport {
    pub fn get(&self, scheme: &str, model: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.scheme == scheme && r.model == model)
    }

    pub fn to_csv(&self, prov: &Provenance) -> Result<String> {
        csv_string(prov, |w| {
            w.write_record(["scheme", "model", "features", "n", "mape", "rmse", "mae", "delta_mape_vs_first_pct", "delta_mape_vs_best_prior_pct"])?;
            for r in &self.rows {
                w.write_record([
                    r.scheme.clone(),
                    r.model.clone(),
                    r.features.to_string(),
                    r.metrics.n.to_string(),
                    fmt_f64(r.metrics.mape),
                    fmt_f64(r.metrics.rmse),
                    fmt_f64(r.metrics.mae),
                    fmt_f64(r.delta_vs_first),
                    fmt_f64(r.delta_vs_best_prior),
                ])?;
            }
            Ok(())
        })
    }

    /// Test MAPE bars grouped by scheme, one bar per model.
    pub fn to_svg(&self, prov: &Provenance) -> String {
        let values: Vec<Vec<f64>> = self
            .schemes
            .iter()
            .map(|s| {
                self.models
                    .iter()
                    .map(|m| self.get(s, m).map_or(f64::NAN, |r| r.metrics.mape))
                    .collect()
            })
            .collect();
        svg::grouped_bars("Test MAPE by feature scheme", "MAPE (%)", &self.schemes, &self.models, &values, prov)
    }
}

/// Fits every (scheme, model) pair on the train range and scores it on the
/// test range.
pub fn compare_schemes(
    table: &FeatureTable,
    schemes: &[SchemeSpec],
    specs: &[ModelSpec],
    train: DateRange,
    test: DateRange,
) -> Result<ComparisonReport> {
    if schemes.is_empty() || specs.is_empty() {
        return Err(Error::invalid("need at least one scheme and one model"));
    }
    for (i, spec) in specs.iter().enumerate() {
        if specs[..i].iter().any(|o| o.kind() == spec.kind()) {
            return Err(Error::invalid(format!("model kind '{}' listed twice", spec.kind())));
        }
    }
    for (i, scheme) in schemes.iter().enumerate() {
        if schemes[..i].iter().any(|o| o.id == scheme.id) {
            return Err(Error::invalid(format!("scheme id '{}' listed twice", scheme.id)));
        }
    }
    let (tr, te) = split(table, train, test)?;
    let mut jobs = Vec::new();
    for scheme in schemes {
        let tr_s = build_scheme(&tr, scheme)?;
        let te_s = build_scheme(&te, scheme)?;
        for spec in specs {
            spec.validate()?;
            jobs.push((scheme, spec, tr_s.clone(), te_s.clone()));
        }
    }
    let run = |(scheme, spec, tr_s, te_s): &(&SchemeSpec, &ModelSpec, FeatureTable, FeatureTable)| -> Result<(String, String, usize, Metrics)> {
        let model = fit(spec, tr_s)?;
        let pred = model.predict(te_s)?;
        let metrics = evaluate(te_s.target_values(), &pred)?;
        Ok((scheme.id.clone(), spec.kind().to_string(), tr_s.n_cols() - 1, metrics))
    };
    #[cfg(feature = "parallel")]
    let results: Vec<_> = {
        use rayon::prelude::*;
        jobs.par_iter().map(run).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<_> = jobs.iter().map(run).collect::<Result<_>>()?;

    let scheme_ids: Vec<String> = schemes.iter().map(|s| s.id.clone()).collect();
    let model_ids: Vec<String> = specs.iter().map(|s| s.kind().to_string()).collect();
    let mape = |s: &str, m: &str| {
        results.iter().find(|r| r.0 == s && r.1 == m).map(|r| r.3.mape).expect("every pair ran")
    };
    let rel = |a: f64, b: f64| 100.0 * (a - b) / b;
    let rows = results
        .iter()
        .map(|(s, m, features, metrics)| {
            let first = mape(&scheme_ids[0], m);
            let prior = scheme_ids[..scheme_ids.len().saturating_sub(1).max(1)]
                .iter()
                .map(|sid| mape(sid, m))
                .fold(f64::INFINITY, f64::min);
            ComparisonRow {
                scheme: s.clone(),
                model: m.clone(),
                features: *features,
                metrics: *metrics,
                delta_vs_first: rel(metrics.mape, first),
                delta_vs_best_prior: rel(metrics.mape, prior),
            }
        })
        .collect();
    Ok(ComparisonReport { schemes: scheme_ids, models: model_ids, rows })
}
