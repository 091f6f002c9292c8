mod common;

use common::table;
use loadfeat_core::analyze::{beeswarm_export, lag_correlation, partial_dependence, sobol_pointwise};
use loadfeat_core::artifact::Provenance;
use loadfeat_core::identify::DimensionAttribution;
use loadfeat_core::models::{fit, Fitted, GbrtParams, ModelSpec};
use loadfeat_core::stdb::Dimension;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn uniform(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

#[test]
fn linear_model_pdp_has_the_coefficient_as_slope() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = uniform(&mut rng, 200, 0.0, 10.0);
    let b = uniform(&mut rng, 200, -5.0, 5.0);
    let y: Vec<f64> = a.iter().zip(&b).map(|(x, z)| 100.0 + 3.0 * x - 2.0 * z).collect();
    let t = table(vec![("load", Dimension::L, y), ("a", Dimension::G, a.clone()), ("b", Dimension::A, b)]);
    let m = fit(&ModelSpec::ridge(1e-9, 0), &t).unwrap();
    let pdp = partial_dependence(&m, &t, "a", 25).unwrap();
    let Fitted::Ridge(r) = &m.fitted else { unreachable!() };
    let range = m.scaler.max[0] - m.scaler.min[0];
    assert!((pdp.slope() - r.coef[0] / range).abs() < 1e-6);
    assert!((pdp.slope() - 3.0).abs() < 1e-6);
    for w in pdp.pd.windows(2) {
        assert!(w[1] > w[0]);
    }
    assert_eq!(pdp.grid.len(), 25);
    let (lo, hi) = a.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(*v), h.max(*v)));
    assert_eq!((pdp.grid[0], pdp.grid[24]), (lo, hi));
}

#[test]
fn feature_the_model_ignores_has_flat_pdp() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let a = uniform(&mut rng, 150, 0.0, 10.0);
    let y: Vec<f64> = a.iter().map(|x| x * x).collect();
    let flat = table(vec![("load", Dimension::L, y.clone()), ("a", Dimension::G, a.clone()), ("z", Dimension::S, vec![4.0; 150])]);
    let varied = table(vec![("load", Dimension::L, y), ("a", Dimension::G, a), ("z", Dimension::S, uniform(&mut rng, 150, 0.0, 9.0))]);
    for spec in [ModelSpec::ridge(1e-3, 0), ModelSpec::gbrt(GbrtParams::default(), 0)] {
        // Trained on a constant column, so its scaled input is always 0.
        let m = fit(&spec, &flat).unwrap();
        let pdp = partial_dependence(&m, &varied, "z", 20).unwrap();
        assert!(pdp.pd.iter().all(|p| *p == pdp.pd[0]), "{}", spec.kind());
    }
}

#[test]
fn v_shaped_response_has_its_minimum_at_the_vertex() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 1500;
    let temp = uniform(&mut rng, n, 20.0, 110.0);
    let other = uniform(&mut rng, n, 0.0, 1.0);
    let y: Vec<f64> = temp
        .iter()
        .zip(&other)
        .map(|(t, o)| 500.0 + 2.0 * (t - 70.0).abs() + 5.0 * o + rng.sample::<f64, _>(StandardNormal))
        .collect();
    let t = table(vec![("load", Dimension::L, y), ("tmax", Dimension::G, temp), ("o", Dimension::A, other)]);
    let m = fit(&ModelSpec::gbrt(GbrtParams::default(), 0), &t).unwrap();
    let pdp = partial_dependence(&m, &t, "tmax", 50).unwrap();
    let step = pdp.grid[1] - pdp.grid[0];
    assert!((pdp.argmin() - 70.0).abs() <= step, "argmin {} step {step}", pdp.argmin());
}

#[test]
fn lag_scan_finds_planted_shift_and_ignores_noise() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 1000;
    let x: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let noise: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let null = lag_correlation("x", &x, &noise, 120).unwrap();
    assert!(null.best_r.abs() < 0.2, "{}", null.best_r);
    assert_eq!(null.correlations.len(), 121);

    let y: Vec<f64> = (0..n).map(|t| if t >= 37 { -x[t - 37] } else { 0.0 } + 0.3 * noise[t]).collect();
    let rep = lag_correlation("x", &x, &y, 120).unwrap();
    assert_eq!(rep.best_lag, 37);
    assert!(rep.best_r < -0.9);
    assert!(lag_correlation("x", &x[..100], &y[..100], 80).is_err());
}

fn attribution(values: Vec<Vec<f64>>) -> DimensionAttribution {
    let g = values[0].len();
    let n = values.len();
    DimensionAttribution {
        groups: ["G", "A", "I", "S"][..g].iter().map(|s| s.to_string()).collect(),
        samples: (0..n).collect(),
        group_levels: vec![vec![0.5; g]; n],
        baseline: 1.0,
        predictions: values.iter().map(|v| 1.0 + v.iter().sum::<f64>()).collect(),
        mean_abs: (0..g).map(|k| values.iter().map(|v| v[k].abs()).sum::<f64>() / n as f64).collect(),
        positive_fraction: vec![0.5; g],
        values,
    }
}

#[test]
fn beeswarm_is_seeded_and_handles_edge_cases() {
    let prov = Provenance::new("test", 0);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let att = attribution((0..50).map(|_| uniform(&mut rng, 4, -2.0, 2.0)).collect());
    let a = beeswarm_export(&att, 9, &prov).unwrap();
    assert_eq!(a, beeswarm_export(&att, 9, &prov).unwrap());
    assert_eq!(a.0.lines().filter(|l| !l.starts_with('#')).count(), 1 + 50 * 4);

    let single = beeswarm_export(&attribution(vec![vec![0.3, -0.1]]), 1, &prov).unwrap();
    assert!(single.1.contains("<svg") && !single.1.contains("NaN"));
    let zeros = beeswarm_export(&attribution(vec![vec![0.0; 4]; 10]), 1, &prov).unwrap();
    assert!(zeros.1.contains("<svg") && !zeros.1.contains("NaN"));

    let mut empty = attribution(vec![vec![0.0]]);
    empty.values.clear();
    assert!(beeswarm_export(&empty, 1, &prov).is_err());
}

fn names(d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("x{i}")).collect()
}

#[test]
fn sobol_additive_first_orders_sum_to_one() {
    let c = [1.0, 2.0, 3.0];
    let r = sobol_pointwise(|x| c.iter().zip(x).map(|(a, b)| a * b).sum(), &names(3), &[(0.0, 1.0); 3], 2048, 11).unwrap();
    let total: f64 = r.s1.iter().sum();
    assert!((0.95..=1.05).contains(&total), "sum S1 = {total}");
    let denom: f64 = c.iter().map(|v| v * v).sum();
    for k in 0..3 {
        let want = c[k] * c[k] / denom;
        assert!((r.s1[k] - want).abs() < 0.03, "S1[{k}] {}", r.s1[k]);
        assert!((r.st[k] - want).abs() < 0.03, "ST[{k}] {}", r.st[k]);
        assert!(r.s1_conf[k] >= 0.0 && r.st_conf[k] >= 0.0);
    }
    for p in &r.s2 {
        assert!(p.s2.abs() < 0.05);
    }
}

#[test]
fn sobol_detects_pure_interaction() {
    // f = (x1 - 0.5)(x2 - 0.5): no main effects, all variance in the pair.
    let r = sobol_pointwise(|x| (x[0] - 0.5) * (x[1] - 0.5), &names(3), &[(0.0, 1.0); 3], 4096, 2).unwrap();
    for k in 0..2 {
        assert!(r.s1[k].abs() < 0.05);
        assert!((r.st[k] - 1.0).abs() < 0.08);
    }
    assert!(r.st[2].abs() < 1e-12);
    assert!((r.s2_of(0, 1).unwrap() - 1.0).abs() < 0.1);
}

#[test]
fn sobol_is_seeded_and_bounds_are_checked() {
    let f = |x: &[f64]| x[0] * x[0] + x[1];
    let a = sobol_pointwise(f, &names(2), &[(0.0, 1.0), (-1.0, 1.0)], 512, 4).unwrap();
    assert_eq!(a, sobol_pointwise(f, &names(2), &[(0.0, 1.0), (-1.0, 1.0)], 512, 4).unwrap());
    assert!(sobol_pointwise(f, &names(2), &[(0.0, 1.0), (1.0, 1.0)], 512, 4).is_err());
    assert!(sobol_pointwise(f, &names(2), &[(0.0, 1.0); 2], 10, 4).is_err());
    assert!(sobol_pointwise(f, &names(1), &[(0.0, 1.0); 2], 512, 4).is_err());
}
