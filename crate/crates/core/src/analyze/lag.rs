use serde::Serialize;

use crate::artifact::{csv_string, fmt_f64, Provenance};
use crate::error::{Error, Result};
use crate::stats::pearson;

/// Minimum overlap beyond `max_lag`.
pub const MIN_OVERLAP: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LagReport {
    pub feature: String,
    /// `correlations[k]` is r between y(t) and x(t - k).
    pub correlations: Vec<f64>,
    pub best_lag: usize,
    pub best_r: f64,
}

/// Pearson r of `y(t)` against `x(t - k)` for `k = 0..=max_lag` over the
/// overlapping range. The best lag maximizes |r|; ties go to the smaller k.
pub fn lag_correlation(feature: &str, x: &[f64], y: &[f64], max_lag: usize) -> Result<LagReport> {
    if x.len() != y.len() {
        return Err(Error::invalid("lag series must be aligned and equal length"));
    }
    if x.len() <= max_lag + MIN_OVERLAP {
        return Err(Error::invalid(format!(
            "series of length {} is too short for max_lag {max_lag} (need more than {})",
            x.len(),
            max_lag + MIN_OVERLAP
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::invalid("lag series contain missing or non-finite values"));
    }
    let n = x.len();
    let correlations: Vec<f64> = (0..=max_lag)
        .map(|k| pearson(&x[..n - k], &y[k..]).ok_or(Error::ZeroVariance))
        .collect::<Result<_>>()?;
    let mut best_lag = 0;
    for (k, r) in correlations.iter().enumerate() {
        if r.abs() > correlations[best_lag].abs() {
            best_lag = k;
        }
    }
    Ok(LagReport {
        feature: feature.to_string(),
        best_r: correlations[best_lag],
        correlations,
        best_lag,
    })
}

/// Long format: `feature,lag,r,best`.
pub fn lags_csv(reports: &[LagReport], prov: &Provenance) -> Result<String> {
    csv_string(prov, |w| {
        w.write_record(["feature", "lag", "r", "best"])?;
        for rep in reports {
            for (k, r) in rep.correlations.iter().enumerate() {
                let best = if k == rep.best_lag { "yes" } else { "no" };
                w.write_record([rep.feature.clone(), k.to_string(), fmt_f64(*r), best.to_string()])?;
            }
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exact_shift() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x: Vec<f64> = (0..300).map(|_| rng.random::<f64>()).collect();
        let mut y = vec![0.0; 300];
        for t in 3..300 {
            y[t] = x[t - 3];
        }
        y[..3].copy_from_slice(&[0.3, 0.6, 0.1]);
        let r = lag_correlation("x", &x, &y, 20).unwrap();
        assert_eq!(r.best_lag, 3);
        assert!((r.best_r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn too_short_and_constant() {
        let x = vec![1.0; 40];
        assert!(lag_correlation("x", &x, &x, 10).is_err());
        let v: Vec<f64> = (0..50).map(|i| i as f64).collect();
        assert!(lag_correlation("x", &x[..], &v[..40], 5).is_err());
    }
}
