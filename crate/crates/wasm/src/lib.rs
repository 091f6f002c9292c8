//! Browser bindings for three small demos: word ranking over pasted text,
//! Sobol indices of reference functions, and a partial dependence curve on a
//! V-shaped load fixture.
//!
//! Each binding returns a JSON string. The `*_json` functions hold the logic
//! and are callable natively.

use std::f64::consts::PI;

use chrono::NaiveDate;
use loadfeat_core::analyze::{partial_dependence, sobol_pointwise};
use loadfeat_core::corpus::{build_stats, default_stopwords, Document};
use loadfeat_core::models::{fit, GbrtParams, ModelSpec};
use loadfeat_core::stdb::{Column, Dimension, FeatureTable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Twelve bundled utility reports, blank-line separated.
pub const SAMPLE_TEXT: &str = concat!(
    include_str!("../../../data/corpus/report_01.txt"), "\n\n",
    include_str!("../../../data/corpus/report_02.txt"), "\n\n",
    include_str!("../../../data/corpus/report_03.txt"), "\n\n",
    include_str!("../../../data/corpus/report_04.txt"), "\n\n",
    include_str!("../../../data/corpus/report_05.txt"), "\n\n",
    include_str!("../../../data/corpus/report_06.txt"), "\n\n",
    include_str!("../../../data/corpus/report_07.txt"), "\n\n",
    include_str!("../../../data/corpus/report_08.txt"), "\n\n",
    include_str!("../../../data/corpus/report_09.txt"), "\n\n",
    include_str!("../../../data/corpus/report_10.txt"), "\n\n",
    include_str!("../../../data/corpus/report_11.txt"), "\n\n",
    include_str!("../../../data/corpus/report_12.txt"),
);

/// Ranks words of `text` against `anchor`. Paragraphs (blank-line separated)
/// are documents.
pub fn rank_words_json(text: &str, anchor: &str, window: usize, threshold: f64) -> Result<Value, String> {
    let stop = default_stopwords();
    let docs: Vec<Document> = text
        .split("\n\n")
        .filter(|p| !p.trim().is_empty())
        .enumerate()
        .map(|(i, p)| Document::new(format!("p{i}"), p, &stop))
        .collect();
    let stats = build_stats(&docs, window).map_err(|e| e.to_string())?;
    let anchor = anchor.trim().to_lowercase();
    let ranking = stats.rank_features(&anchor, threshold).map_err(|e| e.to_string())?;
    Ok(json!({
        "anchor": anchor,
        "documents": docs.len(),
        "windows": stats.total_windows(),
        "vocabulary": stats.vocab().len(),
        "skipped": ranking.skipped,
        "entries": ranking.entries.iter().map(|e| json!({
            "word": e.word, "pmi": e.pmi, "cosine": e.cosine, "dcw": e.dcw, "kept": e.kept,
        })).collect::<Vec<_>>(),
    }))
}

/// Estimated and, where known, exact indices for one of `ishigami`,
/// `additive`, or `interaction`.
pub fn sobol_json(function: &str, n: usize, seed: u64) -> Result<Value, String> {
    type F = fn(&[f64]) -> f64;
    let (f, bounds, exact_s1, exact_st): (F, Vec<(f64, f64)>, Vec<f64>, Vec<f64>) = match function {
        "ishigami" => {
            let (a, b) = (7.0, 0.1);
            let v1 = 0.5 * (1.0 + b * PI.powi(4) / 5.0).powi(2);
            let v2 = a * a / 8.0;
            let v13 = 8.0 * b * b * PI.powi(8) / 225.0;
            let v = v1 + v2 + v13;
            (
                |x| x[0].sin() + 7.0 * x[1].sin().powi(2) + 0.1 * x[2].powi(4) * x[0].sin(),
                vec![(-PI, PI); 3],
                vec![v1 / v, v2 / v, 0.0],
                vec![(v1 + v13) / v, v2 / v, v13 / v],
            )
        }
        "additive" => {
            let s = vec![1.0 / 14.0, 4.0 / 14.0, 9.0 / 14.0];
            (|x| x[0] + 2.0 * x[1] + 3.0 * x[2], vec![(0.0, 1.0); 3], s.clone(), s)
        }
        // x3 is inert; x1 and x2 act only through their product.
        "interaction" => (|x| (x[0] - 0.5) * (x[1] - 0.5), vec![(0.0, 1.0); 3], vec![0.0; 3], vec![1.0, 1.0, 0.0]),
        other => return Err(format!("unknown test function `{other}`")),
    };
    let names: Vec<String> = (1..=3).map(|i| format!("x{i}")).collect();
    let r = sobol_pointwise(f, &names, &bounds, n, seed).map_err(|e| e.to_string())?;
    Ok(json!({
        "function": function,
        "n": n,
        "names": names,
        "s1": r.s1, "s1_conf": r.s1_conf,
        "st": r.st, "st_conf": r.st_conf,
        "s2": r.s2.iter().map(|p| json!({"i": p.i, "j": p.j, "s2": p.s2})).collect::<Vec<_>>(),
        "exact_s1": exact_s1,
        "exact_st": exact_st,
    }))
}

/// Fits gradient-boosted trees to `load = 500 + slope * |t - equilibrium| + noise`
/// and returns the partial dependence on `t` over [20, 110].
pub fn pdp_json(equilibrium: f64, slope: f64, noise: f64, grid: usize, seed: u64) -> Result<Value, String> {
    if !(20.0..=110.0).contains(&equilibrium) {
        return Err("equilibrium must lie in [20, 110]".into());
    }
    if !(noise >= 0.0 && noise.is_finite() && slope.is_finite()) {
        return Err("noise must be >= 0 and slope finite".into());
    }
    let n = 800;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let temp: Vec<f64> = (0..n).map(|_| rng.random_range(20.0..110.0)).collect();
    let humid: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let load: Vec<f64> = temp
        .iter()
        .zip(&humid)
        .map(|(t, h)| 500.0 + slope * (t - equilibrium).abs() + 10.0 * h + noise * rng.random_range(-1.0..1.0))
        .collect();
    let dates = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap().iter_days().take(n).collect();
    let table = FeatureTable::new(
        dates,
        vec![
            Column::new("load", Dimension::L, "MW"),
            Column::new("tmax", Dimension::G, "F"),
            Column::new("humidity", Dimension::G, "fraction"),
        ],
        vec![load, temp, humid],
        "load",
    )
    .map_err(|e| e.to_string())?;
    let params = GbrtParams { trees: 120, ..GbrtParams::default() };
    let model = fit(&ModelSpec::gbrt(params, seed), &table).map_err(|e| e.to_string())?;
    let curve = partial_dependence(&model, &table, "tmax", grid).map_err(|e| e.to_string())?;
    Ok(json!({
        "grid": curve.grid,
        "pd": curve.pd,
        "argmin": curve.argmin(),
        "equilibrium": equilibrium,
        "step": curve.grid[1] - curve.grid[0],
    }))
}

fn to_js(r: Result<Value, String>) -> Result<String, JsValue> {
    r.map(|v| v.to_string()).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn sample_text() -> String {
    SAMPLE_TEXT.to_string()
}

#[wasm_bindgen]
pub fn rank_words(text: &str, anchor: &str, window: usize, threshold: f64) -> Result<String, JsValue> {
    to_js(rank_words_json(text, anchor, window, threshold))
}

#[wasm_bindgen]
pub fn sobol(function: &str, n: usize, seed: u32) -> Result<String, JsValue> {
    to_js(sobol_json(function, n, seed as u64))
}

#[wasm_bindgen]
pub fn pdp(equilibrium: f64, slope: f64, noise: f64, grid: usize, seed: u32) -> Result<String, JsValue> {
    to_js(pdp_json(equilibrium, slope, noise, grid, seed as u64))
}
