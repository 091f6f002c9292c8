use serde::Serialize;

use crate::artifact::{csv_string, fmt_f64, Provenance};
use crate::error::{Error, Result};
use crate::models::TrainedModel;
use crate::stdb::FeatureTable;
use crate::svg;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PdpCurve {
    pub feature: String,
    pub grid: Vec<f64>,
    pub pd: Vec<f64>,
    pub n: usize,
}

impl PdpCurve {
    /// Grid point with the smallest partial dependence (first on ties).
    pub fn argmin(&self) -> f64 {
        let k = (0..self.pd.len())
            .min_by(|&a, &b| self.pd[a].total_cmp(&self.pd[b]))
            .expect("grid has at least two points");
        self.grid[k]
    }

    /// Least-squares slope of pd against grid.
    pub fn slope(&self) -> f64 {
        let m = self.grid.len() as f64;
        let gx = self.grid.iter().sum::<f64>() / m;
        let gy = self.pd.iter().sum::<f64>() / m;
        let sxy: f64 = self.grid.iter().zip(&self.pd).map(|(x, y)| (x - gx) * (y - gy)).sum();
        let sxx: f64 = self.grid.iter().map(|x| (x - gx).powi(2)).sum();
        sxy / sxx
    }

    pub fn to_csv(&self, prov: &Provenance) -> Result<String> {
        csv_string(prov, |w| {
            w.write_record([self.feature.as_str(), "partial_dependence"])?;
            for (g, p) in self.grid.iter().zip(&self.pd) {
                w.write_record([fmt_f64(*g), fmt_f64(*p)])?;
            }
            Ok(())
        })
    }

    pub fn to_svg(&self, prov: &Provenance) -> String {
        let pts: Vec<(f64, f64)> = self.grid.iter().copied().zip(self.pd.iter().copied()).collect();
        svg::line_chart(
            &format!("Partial dependence of load on {}", self.feature),
            &self.feature,
            "mean predicted load",
            &[(self.feature.clone(), pts)],
            prov,
        )
    }
}

/// Average prediction over the training rows with `feature` forced to each
/// of `grid_size` evenly spaced values between its training min and max.
pub fn partial_dependence(model: &TrainedModel, train: &FeatureTable, feature: &str, grid_size: usize) -> Result<PdpCurve> {
    if grid_size < 2 {
        return Err(Error::invalid("grid_size must be at least 2"));
    }
    let names = model.feature_names();
    let j = names
        .iter()
        .position(|n| n == feature)
        .ok_or_else(|| Error::UnknownFeature(feature.to_string()))?;
    let rows = train.rows_of(&names)?;
    let (lo, hi) = crate::stats::min_max(&rows.iter().map(|r| r[j]).collect::<Vec<_>>());
    if rows.is_empty() || hi <= lo {
        return Err(Error::invalid(format!("degenerate grid: `{feature}` is constant on the training rows")));
    }
    let grid: Vec<f64> = (0..grid_size)
        .map(|k| if k + 1 == grid_size { hi } else { lo + (hi - lo) * k as f64 / (grid_size - 1) as f64 })
        .collect();
    let eval = |g: &f64| -> f64 {
        let forced: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| {
                let mut r = r.clone();
                r[j] = *g;
                r
            })
            .collect();
        let p = model.predict_rows(&forced);
        p.iter().sum::<f64>() / p.len() as f64
    };
    #[cfg(feature = "parallel")]
    let pd: Vec<f64> = {
        use rayon::prelude::*;
        grid.par_iter().map(eval).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let pd: Vec<f64> = grid.iter().map(eval).collect();
    Ok(PdpCurve { feature: feature.to_string(), grid, pd, n: rows.len() })
}
