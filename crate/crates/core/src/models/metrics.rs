use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Point-forecast accuracy. `mape` is a percentage; `rmse` and `mae` are in
/// target units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mape: f64,
    pub rmse: f64,
    pub mae: f64,
    pub n: usize,
}

pub fn evaluate(y_true: &[f64], y_pred: &[f64]) -> Result<Metrics> {
    if y_true.len() != y_pred.len() {
        return Err(Error::invalid(format!(
            "length mismatch: {} true values, {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    if y_true.is_empty() {
        return Err(Error::invalid("cannot evaluate an empty forecast"));
    }
    if let Some(i) = y_true.iter().position(|&y| y == 0.0) {
        return Err(Error::MapeUndefined(i));
    }
    let n = y_true.len() as f64;
    let (mut ape, mut se, mut ae) = (0.0, 0.0, 0.0);
    for (y, p) in y_true.iter().zip(y_pred) {
        let e = p - y;
        ape += (e / y).abs();
        se += e * e;
        ae += e.abs();
    }
    Ok(Metrics {
        mape: 100.0 * ape / n,
        rmse: (se / n).sqrt(),
        mae: ae / n,
        n: y_true.len(),
    })
}
