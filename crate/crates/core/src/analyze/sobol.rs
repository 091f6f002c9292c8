//! Variance-based sensitivity with Saltelli sampling.
//!
//! Base matrices A and B are the first and second `d` dimensions of a
//! seeded Owen-scrambled Sobol sequence, mapped onto the input bounds. For
//! each input `j`, `AB_j` is A with column `j` from B and `BA_j` is B with
//! column `j` from A, giving `(2d + 2) n` model evaluations. Outputs are
//! standardized over A and B before estimation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::artifact::{csv_string, Provenance};
use crate::error::{Error, Result};
use crate::stats::Z_975;

pub const MIN_SAMPLES: usize = 100;
pub const MAX_SAMPLES: usize = 1 << 16;
pub const BOOTSTRAP_RESAMPLES: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairIndex {
    pub i: usize,
    pub j: usize,
    pub s2: f64,
    pub s2_conf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SobolReport {
    pub names: Vec<String>,
    pub s1: Vec<f64>,
    pub s1_conf: Vec<f64>,
    pub st: Vec<f64>,
    pub st_conf: Vec<f64>,
    /// Pairs `i < j` in lexicographic order.
    pub s2: Vec<PairIndex>,
    pub n: usize,
    pub seed: u64,
}

fn fmt4(x: f64) -> String {
    format!("{x:.4}")
}

impl SobolReport {
    /// Tasks/ST/S1/S2/STconf/S1conf/S2conf, one row per input then one per
    /// pair (`A+B`), `non` in inapplicable cells.
    pub fn to_csv(&self, prov: &Provenance) -> Result<String> {
        let prov = prov.clone().with("sobol_n", self.n).with("bootstrap", BOOTSTRAP_RESAMPLES);
        csv_string(&prov, |w| {
            w.write_record(["Tasks", "ST", "S1", "S2", "STconf", "S1conf", "S2conf"])?;
            let non = || "non".to_string();
            for (k, name) in self.names.iter().enumerate() {
                w.write_record([
                    name.clone(),
                    fmt4(self.st[k]),
                    fmt4(self.s1[k]),
                    non(),
                    fmt4(self.st_conf[k]),
                    fmt4(self.s1_conf[k]),
                    non(),
                ])?;
            }
            for p in &self.s2 {
                w.write_record([
                    format!("{}+{}", self.names[p.i], self.names[p.j]),
                    non(),
                    non(),
                    fmt4(p.s2),
                    non(),
                    non(),
                    fmt4(p.s2_conf),
                ])?;
            }
            Ok(())
        })
    }

    pub fn s2_of(&self, i: usize, j: usize) -> Option<f64> {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        self.s2.iter().find(|p| p.i == i && p.j == j).map(|p| p.s2)
    }
}

/// Sobol indices of a batch model function over independent uniform inputs.
/// `model` receives a batch of input rows and returns one output per row.
pub fn sobol_indices<F>(model: F, names: &[String], bounds: &[(f64, f64)], n: usize, seed: u64) -> Result<SobolReport>
where
    F: Fn(&[Vec<f64>]) -> Vec<f64>,
{
    let d = bounds.len();
    if d == 0 || names.len() != d {
        return Err(Error::invalid("need one name per input and at least one input"));
    }
    if n < MIN_SAMPLES {
        return Err(Error::invalid(format!("sample budget too small: n = {n} < {MIN_SAMPLES}")));
    }
    if n > MAX_SAMPLES {
        return Err(Error::invalid(format!("n = {n} exceeds the {MAX_SAMPLES}-point sequence")));
    }
    if 2 * d > sobol_burley::NUM_DIMENSIONS as usize {
        return Err(Error::invalid("too many inputs for the Sobol sequence"));
    }
    if bounds.iter().any(|(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo < hi)) {
        return Err(Error::invalid("bounds must be finite with lo < hi"));
    }
    let seed32 = (seed ^ (seed >> 32)) as u32;
    let point = |i: usize, offset: usize| -> Vec<f64> {
        (0..d)
            .map(|j| {
                let u = sobol_burley::sample(i as u32, (offset + j) as u32, seed32) as f64;
                bounds[j].0 + u * (bounds[j].1 - bounds[j].0)
            })
            .collect()
    };
    let a: Vec<Vec<f64>> = (0..n).map(|i| point(i, 0)).collect();
    let b: Vec<Vec<f64>> = (0..n).map(|i| point(i, d)).collect();
    let mut batch = Vec::with_capacity((2 * d + 2) * n);
    batch.extend(a.iter().cloned());
    batch.extend(b.iter().cloned());
    for j in 0..d {
        batch.extend(a.iter().zip(&b).map(|(ra, rb)| {
            let mut r = ra.clone();
            r[j] = rb[j];
            r
        }));
    }
    for j in 0..d {
        batch.extend(a.iter().zip(&b).map(|(ra, rb)| {
            let mut r = rb.clone();
            r[j] = ra[j];
            r
        }));
    }
    let y = model(&batch);
    if y.len() != batch.len() || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("model returned the wrong number of outputs or non-finite values"));
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let sd = (y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / y.len() as f64).sqrt();
    let scale = if sd > 0.0 { sd } else { 1.0 };
    let y: Vec<f64> = y.iter().map(|v| (v - mean) / scale).collect();
    let fa = &y[..n];
    let fb = &y[n..2 * n];
    let fab = |j: usize| &y[(2 + j) * n..(3 + j) * n];
    let fba = |j: usize| &y[(2 + d + j) * n..(3 + d + j) * n];

    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|i| (i + 1..d).map(move |j| (i, j))).collect();
    // Estimates over a multiset of row indices: (S1, ST, S2 per pair).
    let estimate = |rows: &[usize]| -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let m = rows.len() as f64;
        let mut cat = Vec::with_capacity(2 * rows.len());
        cat.extend(rows.iter().map(|&r| fa[r]));
        cat.extend(rows.iter().map(|&r| fb[r]));
        let cm = cat.iter().sum::<f64>() / cat.len() as f64;
        let var = cat.iter().map(|v| (v - cm).powi(2)).sum::<f64>() / cat.len() as f64;
        let var = if var > 0.0 { var } else { f64::NAN };
        let s1: Vec<f64> = (0..d)
            .map(|j| rows.iter().map(|&r| fb[r] * (fab(j)[r] - fa[r])).sum::<f64>() / m / var)
            .collect();
        let st: Vec<f64> = (0..d)
            .map(|j| 0.5 * rows.iter().map(|&r| (fa[r] - fab(j)[r]).powi(2)).sum::<f64>() / m / var)
            .collect();
        let s2: Vec<f64> = pairs
            .iter()
            .map(|&(i, j)| {
                let vij = rows.iter().map(|&r| fba(i)[r] * fab(j)[r] - fa[r] * fb[r]).sum::<f64>() / m;
                vij / var - s1[i] - s1[j]
            })
            .collect();
        (s1, st, s2)
    };

    let all: Vec<usize> = (0..n).collect();
    let (s1, st, s2) = estimate(&all);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let resamples: Vec<Vec<usize>> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| (0..n).map(|_| rng.random_range(0..n)).collect())
        .collect();
    #[cfg(feature = "parallel")]
    let boots: Vec<_> = {
        use rayon::prelude::*;
        resamples.par_iter().map(|r| estimate(r)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let boots: Vec<_> = resamples.iter().map(|r| estimate(r)).collect();
    let conf = |pick: &dyn Fn(&(Vec<f64>, Vec<f64>, Vec<f64>)) -> f64| {
        let vals: Vec<f64> = boots.iter().map(pick).collect();
        let m = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (vals.len() - 1) as f64;
        Z_975 * var.sqrt()
    };
    let s1_conf = (0..d).map(|j| conf(&|b| b.0[j])).collect();
    let st_conf = (0..d).map(|j| conf(&|b| b.1[j])).collect();
    let s2 = pairs
        .iter()
        .enumerate()
        .map(|(k, &(i, j))| PairIndex { i, j, s2: s2[k], s2_conf: conf(&|b| b.2[k]) })
        .collect();
    Ok(SobolReport {
        names: names.to_vec(),
        s1,
        s1_conf,
        st,
        st_conf,
        s2,
        n,
        seed,
    })
}

/// Convenience wrapper for a function of one input row.
pub fn sobol_pointwise<F>(f: F, names: &[String], bounds: &[(f64, f64)], n: usize, seed: u64) -> Result<SobolReport>
where
    F: Fn(&[f64]) -> f64,
{
    sobol_indices(|rows: &[Vec<f64>]| rows.iter().map(|r| f(r)).collect(), names, bounds, n, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn names(d: usize) -> Vec<String> {
        (1..=d).map(|i| format!("x{i}")).collect()
    }

    #[test]
    fn additive_two_inputs() {
        let r = sobol_pointwise(|x| x[0] + x[1], &names(2), &[(0.0, 1.0), (0.0, 1.0)], 1000, 3).unwrap();
        for k in 0..2 {
            assert!((r.s1[k] - 0.5).abs() < 0.03, "{:?}", r.s1);
            assert!((r.st[k] - 0.5).abs() < 0.03, "{:?}", r.st);
        }
        assert!(r.s2[0].s2.abs() < 0.03);
    }

    #[test]
    fn ishigami_first_seed() {
        let f = |x: &[f64]| x[0].sin() + 7.0 * x[1].sin().powi(2) + 0.1 * x[2].powi(4) * x[0].sin();
        let r = sobol_pointwise(f, &names(3), &[(-PI, PI); 3], 4096, 0).unwrap();
        assert!((r.s1[0] - 0.3139).abs() < 0.04);
        assert!((r.s1[1] - 0.4424).abs() < 0.04);
        assert!(r.s1[2].abs() < 0.04);
        assert!((r.st[2] - 0.2437).abs() < 0.04);
    }

    #[test]
    fn budget_and_layout() {
        assert!(sobol_pointwise(|x| x[0], &names(1), &[(0.0, 1.0)], 99, 0).is_err());
        let r = sobol_pointwise(|x| x[0] * x[1] + x[2], &names(3), &[(0.0, 1.0); 3], 128, 1).unwrap();
        let csv = r.to_csv(&Provenance::default()).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[1], "Tasks,ST,S1,S2,STconf,S1conf,S2conf");
        assert_eq!(lines.len(), 2 + 3 + 3);
        assert!(lines[2].starts_with("x1,") && lines[2].contains(",non,"));
        assert!(lines[5].starts_with("x1+x2,non,non,"));
        assert_eq!(r, sobol_pointwise(|x| x[0] * x[1] + x[2], &names(3), &[(0.0, 1.0); 3], 128, 1).unwrap());
    }
}
