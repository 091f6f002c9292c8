//! Chained-equation multiple imputation.
//!
//! Each chain starts from column means, then sweeps the incomplete columns
//! `rounds` times. A sweep regresses the column (ridge, standardized
//! predictors) on every other column over its observed rows, redraws the
//! residual variance from its scaled inverse chi-square posterior, and
//! replaces the missing cells with prediction plus a noise draw. The final
//! value of a cell is the mean over [`IMPUTE_CHAINS`] independently seeded
//! chains. Observed cells are never written.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, Normal};

use super::FeatureTable;
use crate::error::{Error, Result};
use crate::linalg::ridge_solve;

pub const IMPUTE_CHAINS: usize = 5;
/// Minimum fraction of observed cells per column.
pub const OBSERVED_FLOOR: f64 = 0.3;

#[derive(Debug, Clone, PartialEq)]
pub struct ImputeOptions {
    pub rounds: usize,
    pub seed: u64,
    pub chains: usize,
    /// Ridge penalty per observed row, on standardized predictors.
    pub ridge: f64,
}

impl ImputeOptions {
    pub fn new(rounds: usize, seed: u64) -> Self {
        ImputeOptions {
            rounds,
            seed,
            chains: IMPUTE_CHAINS,
            ridge: 1e-8,
        }
    }
}

pub fn impute(table: &FeatureTable, rounds: usize, seed: u64) -> Result<FeatureTable> {
    impute_with(table, &ImputeOptions::new(rounds, seed))
}

pub fn impute_with(table: &FeatureTable, opts: &ImputeOptions) -> Result<FeatureTable> {
    if opts.rounds == 0 || opts.chains == 0 {
        return Err(Error::invalid("imputation rounds and chains must be positive"));
    }
    let n = table.n_rows();
    for (c, col) in table.columns().iter().zip(table.data()) {
        let observed = col.iter().filter(|x| !x.is_nan()).count();
        let frac = if n == 0 { 1.0 } else { observed as f64 / n as f64 };
        if frac < OBSERVED_FLOOR {
            return Err(Error::TooSparse {
                column: c.name.clone(),
                observed: frac * 100.0,
                floor: OBSERVED_FLOOR * 100.0,
            });
        }
    }
    let incomplete: Vec<usize> = (0..table.n_cols())
        .filter(|&j| table.data()[j].iter().any(|x| x.is_nan()))
        .collect();
    if incomplete.is_empty() {
        return Ok(table.clone());
    }

    let run = |chain: usize| run_chain(table.data(), &incomplete, opts, chain as u64);
    #[cfg(feature = "parallel")]
    let chains: Vec<Vec<Vec<f64>>> = {
        use rayon::prelude::*;
        (0..opts.chains).into_par_iter().map(run).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let chains: Vec<Vec<Vec<f64>>> = (0..opts.chains).map(run).collect::<Result<_>>()?;

    let mut out = table.clone();
    let k = opts.chains as f64;
    for &j in &incomplete {
        let col = &mut out.data_mut()[j];
        for (r, cell) in col.iter_mut().enumerate() {
            if cell.is_nan() {
                *cell = chains.iter().map(|c| c[j][r]).sum::<f64>() / k;
            }
        }
    }
    Ok(out)
}

fn run_chain(
    data: &[Vec<f64>],
    incomplete: &[usize],
    opts: &ImputeOptions,
    chain: u64,
) -> Result<Vec<Vec<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(chain);
    let mut filled: Vec<Vec<f64>> = data.to_vec();
    let masks: Vec<Vec<bool>> = data.iter().map(|c| c.iter().map(|x| x.is_nan()).collect()).collect();
    for &j in incomplete {
        let obs: Vec<f64> = data[j].iter().copied().filter(|x| !x.is_nan()).collect();
        let m = obs.iter().sum::<f64>() / obs.len() as f64;
        for (v, &miss) in filled[j].iter_mut().zip(&masks[j]) {
            if miss {
                *v = m;
            }
        }
    }
    for _ in 0..opts.rounds {
        for &j in incomplete {
            let draws = sweep_column(&filled, &masks[j], j, opts.ridge, &mut rng)?;
            for (r, v) in draws {
                filled[j][r] = v;
            }
        }
    }
    Ok(filled)
}

/// Returns `(row, value)` draws for the missing cells of column `j`.
fn sweep_column(
    filled: &[Vec<f64>],
    missing: &[bool],
    j: usize,
    ridge: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<(usize, f64)>> {
    let obs_rows: Vec<usize> = (0..missing.len()).filter(|&r| !missing[r]).collect();
    let miss_rows: Vec<usize> = (0..missing.len()).filter(|&r| missing[r]).collect();
    let n_obs = obs_rows.len();

    // Standardize predictors on the observed rows; drop constant ones.
    let mut preds = Vec::new();
    for (k, col) in filled.iter().enumerate() {
        if k == j {
            continue;
        }
        let mean = obs_rows.iter().map(|&r| col[r]).sum::<f64>() / n_obs as f64;
        let var = obs_rows.iter().map(|&r| (col[r] - mean).powi(2)).sum::<f64>() / n_obs as f64;
        if var > 0.0 {
            preds.push((k, mean, var.sqrt()));
        }
    }
    let y_obs: Vec<f64> = obs_rows.iter().map(|&r| filled[j][r]).collect();
    let y_mean = y_obs.iter().sum::<f64>() / n_obs as f64;

    let p = preds.len();
    let x = DMatrix::from_fn(n_obs, p, |i, c| {
        let (k, m, s) = preds[c];
        (filled[k][obs_rows[i]] - m) / s
    });
    let yc = DVector::from_iterator(n_obs, y_obs.iter().map(|v| v - y_mean));
    let beta = ridge_solve(&x, &yc, ridge * n_obs as f64)?;
    let resid = &yc - &x * &beta;
    let ssr = resid.norm_squared();
    let dof = n_obs.saturating_sub(p + 1).max(1) as f64;

    let sigma = if ssr > 0.0 {
        let chi = ChiSquared::new(dof).map_err(|e| Error::invalid(e.to_string()))?;
        (ssr / chi.sample(rng).max(f64::MIN_POSITIVE)).sqrt()
    } else {
        0.0
    };
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    Ok(miss_rows
        .into_iter()
        .map(|r| {
            let mut pred = y_mean;
            for (c, &(k, m, s)) in preds.iter().enumerate() {
                pred += beta[c] * (filled[k][r] - m) / s;
            }
            let eps: f64 = noise.sample(rng);
            (r, pred + sigma * eps)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stdb::{Column, Dimension};
    use chrono::NaiveDate;

    fn table(cols: Vec<(&str, Dimension, Vec<f64>)>) -> FeatureTable {
        let n = cols[0].2.len();
        let dates: Vec<NaiveDate> = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap().iter_days().take(n).collect();
        let (columns, data): (Vec<Column>, Vec<Vec<f64>>) = cols
            .into_iter()
            .map(|(name, d, v)| (Column::new(name, d, "u"), v))
            .unzip();
        FeatureTable::new(dates, columns, data, "load").unwrap()
    }

    fn wave(n: usize, f: f64, phase: f64) -> Vec<f64> {
        (0..n).map(|i| 10.0 + 3.0 * (f * i as f64 + phase).sin()).collect()
    }

    #[test]
    fn complete_table_unchanged() {
        let t = table(vec![
            ("load", Dimension::L, wave(50, 0.3, 0.0)),
            ("x", Dimension::G, wave(50, 0.7, 1.0)),
        ]);
        let out = impute(&t, 3, 1).unwrap();
        assert_eq!(out, t);
    }

    #[test]
    fn duplicated_column_recovers_copy() {
        let a = wave(120, 0.21, 0.5);
        let mut b = a.clone();
        b[40] = f64::NAN;
        let t = table(vec![
            ("load", Dimension::L, wave(120, 0.05, 2.0)),
            ("a", Dimension::G, a.clone()),
            ("b", Dimension::G, b),
            ("c", Dimension::A, wave(120, 0.9, 0.1)),
        ]);
        let out = impute(&t, 5, 11).unwrap();
        assert!((out.column("b").unwrap()[40] - a[40]).abs() < 1e-6);
    }

    #[test]
    fn constant_column_gaps_take_constant() {
        let mut c = vec![4.25; 60];
        c[3] = f64::NAN;
        c[17] = f64::NAN;
        let t = table(vec![
            ("load", Dimension::L, wave(60, 0.3, 0.0)),
            ("c", Dimension::S, c),
            ("x", Dimension::G, wave(60, 0.8, 0.4)),
        ]);
        let out = impute(&t, 4, 3).unwrap();
        assert!(out.column("c").unwrap().iter().all(|v| (v - 4.25).abs() < 1e-12));
    }

    #[test]
    fn sparse_column_named_in_error() {
        let mut x = wave(10, 0.5, 0.0);
        for v in x.iter_mut().take(8) {
            *v = f64::NAN;
        }
        let t = table(vec![("load", Dimension::L, wave(10, 0.3, 0.0)), ("sparse", Dimension::G, x)]);
        let err = impute(&t, 2, 0).unwrap_err();
        assert!(err.to_string().contains("sparse"));
    }

    #[test]
    fn observed_cells_untouched_and_seeded() {
        let mut x = wave(80, 0.4, 0.2);
        let mut y = wave(80, 0.13, 1.2);
        for i in (0..80).step_by(7) {
            x[i] = f64::NAN;
        }
        for i in (3..80).step_by(11) {
            y[i] = f64::NAN;
        }
        let t = table(vec![
            ("load", Dimension::L, wave(80, 0.3, 0.0)),
            ("x", Dimension::G, x),
            ("y", Dimension::I, y),
        ]);
        let a = impute(&t, 3, 5).unwrap();
        assert!(a.is_complete());
        for (before, after) in t.data().iter().zip(a.data()) {
            for (u, v) in before.iter().zip(after) {
                if !u.is_nan() {
                    assert_eq!(u.to_bits(), v.to_bits());
                }
            }
        }
        assert_eq!(a, impute(&t, 3, 5).unwrap());
    }
}
