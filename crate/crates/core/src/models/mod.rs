//! Forecasting regressors and the feature-scheme benchmark.
//!
//! Inputs are min-max scaled with bounds taken from the training table only;
//! a constant training column scales to 0. Every model is a pure function of
//! (spec, training data, seed).

mod compare;
pub mod gbrt;
mod metrics;
pub mod mlp;
pub mod ridge;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stdb::{Column, DateRange, FeatureTable};

pub use compare::{compare_schemes, ComparisonReport, ComparisonRow};
pub use gbrt::{Gbrt, GbrtParams};
pub use metrics::{evaluate, Metrics};
pub use mlp::{Activation, Mlp, MlpParams};
pub use ridge::Ridge;

pub const MIN_TRAIN_ROWS: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Hyperparameters {
    Ridge { lambda: f64 },
    Gbrt(GbrtParams),
    Mlp(MlpParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(flatten)]
    pub params: Hyperparameters,
    pub seed: u64,
}

impl ModelSpec {
    pub fn ridge(lambda: f64, seed: u64) -> Self {
        ModelSpec { params: Hyperparameters::Ridge { lambda }, seed }
    }

    pub fn gbrt(params: GbrtParams, seed: u64) -> Self {
        ModelSpec { params: Hyperparameters::Gbrt(params), seed }
    }

    pub fn mlp(params: MlpParams, seed: u64) -> Self {
        ModelSpec { params: Hyperparameters::Mlp(params), seed }
    }

    /// Ridge, GBRT, and MLP with their default settings.
    pub fn defaults(seed: u64) -> Vec<ModelSpec> {
        vec![
            ModelSpec::ridge(1e-3, seed),
            ModelSpec::gbrt(GbrtParams::default(), seed),
            ModelSpec::mlp(MlpParams::default(), seed),
        ]
    }

    pub fn kind(&self) -> &'static str {
        match self.params {
            Hyperparameters::Ridge { .. } => "ridge",
            Hyperparameters::Gbrt(_) => "gbrt",
            Hyperparameters::Mlp(_) => "mlp",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match &self.params {
            Hyperparameters::Ridge { lambda } => *lambda > 0.0 && lambda.is_finite(),
            Hyperparameters::Gbrt(p) => {
                p.trees > 0 && p.depth > 0 && p.min_leaf > 0 && p.learning_rate > 0.0 && p.learning_rate.is_finite()
            }
            Hyperparameters::Mlp(p) => {
                !p.hidden.is_empty()
                    && p.hidden.iter().all(|&h| h > 0)
                    && p.epochs > 0
                    && p.learning_rate > 0.0
                    && p.learning_rate.is_finite()
                    && p.batch_size != Some(0)
                    && p.l2 >= 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("{} hyperparameters must be positive", self.kind())))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let p = rows.first().map_or(0, Vec::len);
        let mut min = vec![f64::INFINITY; p];
        let mut max = vec![f64::NEG_INFINITY; p];
        for r in rows {
            for j in 0..p {
                min[j] = min[j].min(r[j]);
                max[j] = max[j].max(r[j]);
            }
        }
        MinMaxScaler { min, max }
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, x)| {
                let range = self.max[j] - self.min[j];
                if range > 0.0 {
                    (x - self.min[j]) / range
                } else {
                    0.0
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Fitted {
    Ridge(Ridge),
    Gbrt(Gbrt),
    Mlp(Mlp),
}

/// A fitted regressor bound to its training column list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub spec: ModelSpec,
    pub columns: Vec<Column>,
    pub train_range: Option<DateRange>,
    pub scaler: MinMaxScaler,
    pub fitted: Fitted,
    /// Training MSE of the initial (mean) predictor and of the final model.
    pub initial_loss: f64,
    pub final_loss: f64,
}

pub fn fit(spec: &ModelSpec, train: &FeatureTable) -> Result<TrainedModel> {
    spec.validate()?;
    if train.n_rows() < MIN_TRAIN_ROWS {
        return Err(Error::invalid(format!(
            "training needs at least {MIN_TRAIN_ROWS} rows, got {}",
            train.n_rows()
        )));
    }
    let names = train.feature_names();
    let rows = train.rows_of(&names)?;
    let y = train.target_values().to_vec();
    if rows.iter().flatten().chain(&y).any(|v| !v.is_finite()) {
        return Err(Error::invalid("training table has non-finite or missing values"));
    }
    let columns: Vec<Column> = train.feature_columns().map(|(c, _)| c.clone()).collect();
    let train_range = match (train.dates().first(), train.dates().last()) {
        (Some(a), Some(b)) => Some(DateRange::new(*a, *b)),
        _ => None,
    };
    fit_rows(spec, columns, train_range, &rows, &y)
}

/// Fits on a raw row-major matrix whose columns follow `columns`.
pub fn fit_rows(
    spec: &ModelSpec,
    columns: Vec<Column>,
    train_range: Option<DateRange>,
    rows: &[Vec<f64>],
    y: &[f64],
) -> Result<TrainedModel> {
    spec.validate()?;
    if rows.len() != y.len() || rows.iter().any(|r| r.len() != columns.len()) {
        return Err(Error::invalid("training matrix shape does not match its columns"));
    }
    if rows.is_empty() {
        return Err(Error::invalid("empty training set"));
    }
    let scaler = MinMaxScaler::fit(rows);
    let x: Vec<Vec<f64>> = rows.iter().map(|r| scaler.transform_row(r)).collect();
    let fitted = match &spec.params {
        Hyperparameters::Ridge { lambda } => Fitted::Ridge(Ridge::fit(&x, y, *lambda)?),
        Hyperparameters::Gbrt(p) => Fitted::Gbrt(Gbrt::fit(&x, y, p)),
        Hyperparameters::Mlp(p) => Fitted::Mlp(Mlp::fit(&x, y, p, spec.seed)?),
    };
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let initial_loss = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / y.len() as f64;
    let mut model = TrainedModel {
        spec: spec.clone(),
        columns,
        train_range,
        scaler,
        fitted,
        initial_loss,
        final_loss: f64::NAN,
    };
    let pred = model.predict_rows(rows);
    model.final_loss = pred.iter().zip(y).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / y.len() as f64;
    if !model.final_loss.is_finite() {
        return Err(Error::Diverged);
    }
    Ok(model)
}

impl TrainedModel {
    pub fn feature_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    /// Predictions for every row of `table`, whose feature columns must be
    /// exactly the training columns.
    pub fn predict(&self, table: &FeatureTable) -> Result<Vec<f64>> {
        let names = self.feature_names();
        let have = table.feature_names();
        let missing: Vec<String> = names.iter().filter(|n| !have.contains(n)).cloned().collect();
        let extra: Vec<String> = have.iter().filter(|n| !names.contains(n)).cloned().collect();
        if !missing.is_empty() || !extra.is_empty() {
            return Err(Error::ColumnMismatch { missing, extra });
        }
        Ok(self.predict_rows(&table.rows_of(&names)?))
    }

    /// Predictions for raw rows in training column order.
    pub fn predict_rows(&self, rows: &[Vec<f64>]) -> Vec<f64> {
        let x: Vec<Vec<f64>> = rows.iter().map(|r| self.scaler.transform_row(r)).collect();
        match &self.fitted {
            Fitted::Ridge(m) => x.iter().map(|r| m.predict_row(r)).collect(),
            Fitted::Gbrt(m) => x.iter().map(|r| m.predict_row(r)).collect(),
            Fitted::Mlp(m) => m.predict(&x),
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.predict_rows(std::slice::from_ref(&row.to_vec()))[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stdb::Dimension;
    use chrono::NaiveDate;

    fn table(x: Vec<Vec<f64>>, y: Vec<f64>) -> FeatureTable {
        let n = y.len();
        let dates: Vec<NaiveDate> = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap().iter_days().take(n).collect();
        let mut columns = vec![Column::new("load", Dimension::L, "u")];
        let mut data = vec![y];
        for (j, col) in x.into_iter().enumerate() {
            columns.push(Column::new(format!("x{j}"), Dimension::G, "u"));
            data.push(col);
        }
        FeatureTable::new(dates, columns, data, "load").unwrap()
    }

    #[test]
    fn spec_json_round_trip() {
        for spec in ModelSpec::defaults(7) {
            let text = serde_json::to_string(&spec).unwrap();
            assert!(text.contains(&format!("\"kind\":\"{}\"", spec.kind())));
            let back: ModelSpec = serde_json::from_str(&text).unwrap();
            assert_eq!(back, spec);
        }
        let s: ModelSpec = serde_json::from_str(r#"{"kind":"ridge","lambda":0.5,"seed":3}"#).unwrap();
        assert_eq!(s, ModelSpec::ridge(0.5, 3));
    }

    #[test]
    fn constant_target_predicted_by_all_kinds() {
        let x0: Vec<f64> = (0..60).map(|i| (i as f64 * 0.3).sin()).collect();
        let t = table(vec![x0], vec![7.5; 60]);
        for spec in ModelSpec::defaults(1) {
            let m = fit(&spec, &t).unwrap();
            for p in m.predict(&t).unwrap() {
                assert!((p - 7.5).abs() < 1e-6, "{}: {p}", spec.kind());
            }
        }
    }

    #[test]
    fn column_mismatch_lists_names() {
        let x0: Vec<f64> = (0..60).map(|i| i as f64).collect();
        let y: Vec<f64> = x0.iter().map(|v| v * 2.0 + 1.0).collect();
        let t = table(vec![x0.clone()], y.clone());
        let m = fit(&ModelSpec::ridge(1e-6, 0), &t).unwrap();
        let other = table(vec![x0.clone(), x0], y);
        let renamed = other.drop_columns(&["x0".to_string()]);
        match m.predict(&renamed) {
            Err(Error::ColumnMismatch { missing, extra }) => {
                assert_eq!(missing, vec!["x0".to_string()]);
                assert_eq!(extra, vec!["x1".to_string()]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn too_few_rows_and_bad_values() {
        let t = table(vec![vec![1.0; 10]], vec![1.0; 10]);
        assert!(fit(&ModelSpec::ridge(1.0, 0), &t).is_err());
        let mut x = vec![1.0; 60];
        x[4] = f64::NAN;
        let t = table(vec![x], vec![1.0; 60]);
        assert!(fit(&ModelSpec::ridge(1.0, 0), &t).is_err());
        assert!(ModelSpec::ridge(0.0, 0).validate().is_err());
    }
}
