use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Solves `(XᵀX + λI) β = Xᵀy`. Inputs are expected to be centered; no
/// intercept is fitted here.
pub fn ridge_solve(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> Result<DVector<f64>> {
    let p = x.ncols();
    if p == 0 {
        return Ok(DVector::zeros(0));
    }
    let xt = x.transpose();
    let mut gram = &xt * x;
    for i in 0..p {
        gram[(i, i)] += lambda;
    }
    let rhs = &xt * y;
    if let Some(chol) = gram.clone().cholesky() {
        return Ok(chol.solve(&rhs));
    }
    gram.lu()
        .solve(&rhs)
        .ok_or_else(|| Error::invalid("singular normal equations; increase the ridge penalty"))
}
