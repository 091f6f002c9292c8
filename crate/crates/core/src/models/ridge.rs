use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::ridge_solve;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ridge {
    pub coef: Vec<f64>,
    pub intercept: f64,
}

impl Ridge {
    /// Penalized least squares with an unpenalized intercept.
    pub fn fit(x: &[Vec<f64>], y: &[f64], lambda: f64) -> Result<Ridge> {
        let n = x.len();
        let p = x.first().map_or(0, Vec::len);
        let x_mean: Vec<f64> = (0..p).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
        let y_mean = y.iter().sum::<f64>() / n as f64;
        let xc = DMatrix::from_fn(n, p, |i, j| x[i][j] - x_mean[j]);
        let yc = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));
        let beta = ridge_solve(&xc, &yc, lambda)?;
        let coef: Vec<f64> = beta.iter().copied().collect();
        let intercept = y_mean - coef.iter().zip(&x_mean).map(|(b, m)| b * m).sum::<f64>();
        Ok(Ridge { coef, intercept })
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.intercept + self.coef.iter().zip(row).map(|(b, x)| b * x).sum::<f64>()
    }
}
