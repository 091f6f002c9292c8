//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Criteria 3, 4, 7, 8 and 9 drive the `loadfeat` binary over the synthetic
//! store; the rest exercise the library against independent references.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use loadfeat_core::analyze::{lag_correlation, partial_dependence, sobol_pointwise};
use loadfeat_core::artifact::Provenance;
use loadfeat_core::cluster::kmeans;
use loadfeat_core::corpus::{build_stats, Document};
use loadfeat_core::identify::{f_score, grouped_shapley, shapley_exact, Group};
use loadfeat_core::models::{fit, GbrtParams, Mlp, MlpParams, ModelSpec};
use loadfeat_core::stdb::{Column, Dimension, FeatureTable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(a: f64, b: f64, tol: f64, what: &str) -> Result<(), String> {
    ensure((a - b).abs() <= tol, || format!("{what}: {a} vs {b} (tol {tol})"))
}

// ---------------------------------------------------------------- fixtures

fn table(cols: Vec<(&str, Dimension, Vec<f64>)>) -> FeatureTable {
    let n = cols[0].2.len();
    let target = cols[0].0.to_string();
    let start: chrono::NaiveDate = "2020-01-01".parse().unwrap();
    let dates = start.iter_days().take(n).collect();
    let (columns, data): (Vec<Column>, Vec<Vec<f64>>) =
        cols.into_iter().map(|(name, d, v)| (Column::new(name, d, "u"), v)).unzip();
    FeatureTable::new(dates, columns, data, &target).unwrap()
}

fn uniform(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn loadfeat(out: &Path, args: &[&str]) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_loadfeat"))
        .current_dir(workspace_root())
        .arg("--out")
        .arg(out)
        .args(args)
        .stdout(std::process::Stdio::null())
        .status()
        .map_err(|e| e.to_string())?;
    ensure(status.success(), || format!("`loadfeat {}` exited with {status}", args.join(" ")))
}

/// Data rows of an artifact CSV, header included, provenance skipped.
fn csv_rows(path: &Path) -> Result<Vec<Vec<String>>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect())
}

fn json(path: &Path) -> Result<serde_json::Value, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

fn identified(out: &Path) -> Result<BTreeSet<String>, String> {
    Ok(csv_rows(&out.join("identify/feature_scores.csv"))?
        .into_iter()
        .skip(1)
        .filter(|r| r.last().map(String::as_str) == Some("yes"))
        .map(|r| r[0].clone())
        .collect())
}

fn planted(out: &Path) -> Result<BTreeSet<String>, String> {
    let truth = json(&out.join("db/raw/ground_truth.json"))?;
    Ok(truth["planted"]
        .as_array()
        .ok_or("ground truth lists no planted features")?
        .iter()
        .map(|p| p["name"].as_str().unwrap().to_string())
        .collect())
}

/// Every file under `dir`, keyed by relative path.
fn tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for e in std::fs::read_dir(dir).into_iter().flatten().flatten() {
            let p = e.path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out.remove(Path::new("runlog.jsonl"));
    out
}

// ---------------------------------------------------------------- 1. DCW

fn windows(doc: &[&str], w: usize) -> Vec<BTreeSet<String>> {
    if doc.is_empty() {
        return vec![];
    }
    let starts = doc.len().saturating_sub(w) + 1;
    (0..starts).map(|s| doc[s..(s + w).min(doc.len())].iter().map(|t| t.to_string()).collect()).collect()
}

fn criterion_dcw() -> Check {
    let corpora: Vec<(Vec<Vec<&str>>, usize)> = vec![
        (vec![vec!["load", "temperature"], vec!["load", "price"], vec!["temperature", "sun"]], 2),
        (
            vec![
                vec!["load", "heat", "load", "demand", "sun", "heat"],
                vec!["price", "gas", "load", "price"],
                vec!["sun", "sun", "irradiance", "load", "heat"],
                vec!["holiday", "demand"],
            ],
            3,
        ),
        (
            vec![
                vec!["load", "b", "c", "d", "e", "load", "b"],
                vec!["c", "load", "e"],
                vec!["d", "d", "b", "load", "c", "e", "f", "load"],
                vec!["f", "b"],
                vec!["g", "e", "c"],
            ],
            4,
        ),
    ];
    let mut compared = 0;
    for (raw, w) in &corpora {
        let docs: Vec<Document> = raw.iter().enumerate().map(|(i, t)| Document::from_tokens(format!("d{i}"), t)).collect();
        let stats = build_stats(&docs, *w).map_err(|e| e.to_string())?;
        let wins: Vec<BTreeSet<String>> = raw.iter().flat_map(|d| windows(d, *w)).collect();
        let t = wins.len() as f64;
        let vocab: Vec<String> = wins.iter().flatten().cloned().collect::<BTreeSet<_>>().into_iter().collect();
        let count = |a: &str, b: Option<&str>| wins.iter().filter(|s| s.contains(a) && b.is_none_or(|b| s.contains(b))).count() as f64;
        let pmi = |a: &str, b: &str| -> Option<f64> {
            let j = if a == b { 0.0 } else { count(a, Some(b)) };
            (j > 0.0).then(|| (j * t / (count(a, None) * count(b, None))).ln())
        };
        let vec_of = |a: &str| -> Vec<f64> { vocab.iter().map(|v| pmi(a, v).map_or(0.0, |p| p.max(0.0))).collect() };
        let cos = |a: &str, b: &str| {
            let (x, y) = (vec_of(a), vec_of(b));
            let d: f64 = x.iter().zip(&y).map(|(p, q)| p * q).sum();
            let n = (x.iter().map(|p| p * p).sum::<f64>() * y.iter().map(|p| p * p).sum::<f64>()).sqrt();
            if n == 0.0 { 0.0 } else { d / n }
        };
        for a in &vocab {
            for b in &vocab {
                if let (Ok(got), Some(want)) = (stats.pmi(a, b), pmi(a, b)) {
                    close(got, want, 1e-12, &format!("pmi({a},{b})"))?;
                    compared += 1;
                }
                if let Ok(got) = loadfeat_core::corpus::cosine(&stats.word_vector(a).unwrap(), &stats.word_vector(b).unwrap()) {
                    close(got, cos(a, b), 1e-12, &format!("cos({a},{b})"))?;
                    compared += 1;
                }
                if a != b {
                    if let (Ok(got), Some(p)) = (stats.dcw_score(a, b), pmi(a, b)) {
                        let want = p / cos(a, b);
                        close(got, want, 1e-12 * (1.0 + want.abs()), &format!("dcw({a},{b})"))?;
                        compared += 1;
                    }
                }
            }
        }
        let ranking = stats.rank_features("load", 0.1).map_err(|e| e.to_string())?;
        for e in &ranking.entries {
            ensure(e.kept == (e.dcw > 0.1), || format!("threshold rule broken for {}", e.word))?;
        }
        ensure(ranking.entries.windows(2).all(|p| p[0].dcw >= p[1].dcw), || "ranking not descending".into())?;
    }
    Ok(format!("{compared} PMI/cosine/DCW values match the window enumerator to 1e-12"))
}

// ---------------------------------------------------------------- 2. k-means

fn brute_partition(points: &[Vec<f64>], k: usize) -> f64 {
    let n = points.len();
    let mut best = f64::INFINITY;
    for code in 0..k.pow(n as u32) {
        let labels: Vec<usize> = (0..n).map(|i| code / k.pow(i as u32) % k).collect();
        if (0..k).any(|c| !labels.contains(&c)) {
            continue;
        }
        let mut sse = 0.0;
        for c in 0..k {
            let m: Vec<&Vec<f64>> = points.iter().zip(&labels).filter(|(_, &l)| l == c).map(|(p, _)| p).collect();
            for d in 0..points[0].len() {
                let mean = m.iter().map(|p| p[d]).sum::<f64>() / m.len() as f64;
                sse += m.iter().map(|p| (p[d] - mean).powi(2)).sum::<f64>();
            }
        }
        best = best.min(sse);
    }
    best
}

fn criterion_kmeans() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for case in 0..100 {
        let n = rng.random_range(3..60);
        let dim = rng.random_range(1..6);
        let pts: Vec<Vec<f64>> = (0..n).map(|_| uniform(&mut rng, dim, -5.0, 5.0)).collect();
        let st = kmeans(&pts, rng.random_range(1..=3), case, 100).map_err(|e| e.to_string())?;
        ensure(st.history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)), || format!("fixture {case}: objective rose"))?;
    }
    let mut instances = 0;
    for n in 3..=8 {
        for _ in 0..3 {
            let pts: Vec<Vec<f64>> = (0..n).map(|_| uniform(&mut rng, 2, -5.0, 5.0)).collect();
            for k in 1..=3.min(n) {
                let exact = brute_partition(&pts, k);
                let found = (0..10).map(|s| kmeans(&pts, k, s, 100).unwrap().objective).fold(f64::INFINITY, f64::min);
                close(found, exact, 1e-9 * (1.0 + exact), &format!("n={n} k={k} objective"))?;
                instances += 1;
            }
        }
    }
    Ok(format!("100 monotone histories; {instances} tiny instances reach the brute-force optimum"))
}

// ---------------------------------------------------------------- 3. LV-KB

fn criterion_lvkb(store: &Path, noiseless: &Path) -> Check {
    let (r, f) = f_score(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 3.0, 5.0]).map_err(|e| e.to_string())?;
    close(r, 6.5 / (5.0f64 * 8.75).sqrt(), 1e-6, "worked r")?;
    close(f, 2.0 * 42.25 / 1.5, 1e-6, "worked f")?;
    ensure((r - 0.9827).abs() < 5e-5 && (f - 56.3).abs() < 0.05, || format!("worked example r={r} f={f}"))?;

    let truth = planted(store)?;
    let found = identified(store)?;
    let hits = found.intersection(&truth).count();
    let fp = found.len() - hits;
    ensure(hits >= 10 && fp <= 5, || format!("noise 0.5: {hits} planted, {fp} false positives"))?;

    let found0 = identified(noiseless)?;
    let hits0 = found0.intersection(&planted(noiseless)?).count();
    ensure(hits0 == 12, || format!("noise 0: only {hits0} of 12 planted"))?;
    Ok(format!("r={r:.4} f={f:.2}; {hits}/12 planted with {fp} false positives; noise 0 recovers {hits0}/12"))
}

// ---------------------------------------------------------------- 4. Shapley

fn criterion_shapley(store: &Path) -> Check {
    let n = 80;
    let wave = |f: f64, p: f64| (0..n).map(|i| (f * i as f64 + p).sin() * 3.0 + 5.0).collect::<Vec<f64>>();
    let cols = [wave(0.31, 0.0), wave(0.77, 1.0), wave(0.13, 2.0), wave(1.91, 0.5)];
    let beta = [1.5, -2.0, 0.0, 0.7];
    let y: Vec<f64> = (0..n).map(|k| 10.0 + (0..4).map(|j| beta[j] * cols[j][k]).sum::<f64>()).collect();
    let t = table(vec![
        ("load", Dimension::L, y),
        ("g", Dimension::G, cols[0].clone()),
        ("a", Dimension::A, cols[1].clone()),
        ("i", Dimension::I, vec![2.0; n]),
        ("s", Dimension::S, cols[3].clone()),
    ]);
    let samples: Vec<usize> = (0..n).collect();
    let lin = fit(&ModelSpec::ridge(1e-12, 0), &t).map_err(|e| e.to_string())?;
    let att = grouped_shapley(&lin, &t, &samples).map_err(|e| e.to_string())?;
    let means: Vec<f64> = [0, 1, 3].iter().map(|&j| cols[j].iter().sum::<f64>() / n as f64).collect();
    for (s, &row) in samples.iter().enumerate() {
        close(att.values[s].iter().sum::<f64>() + att.baseline, att.predictions[s], 1e-8, "efficiency")?;
        for (k, &j) in [0usize, 1, 3].iter().enumerate() {
            let g = [0usize, 1, 3][k];
            close(att.values[s][g], beta[j] * (cols[j][row] - means[k]), 1e-8, "linear closed form")?;
        }
        // `i` is constant in training: its group is null.
        ensure(att.values[s][2] == 0.0, || format!("null group got {}", att.values[s][2]))?;
    }
    let tree = fit(&ModelSpec::gbrt(GbrtParams::default(), 0), &t).map_err(|e| e.to_string())?;
    let groups: Vec<Group> = (0..4).map(|j| Group { name: format!("c{j}"), columns: vec![j] }).collect();
    let att = shapley_exact(&tree, &t, &samples, &groups).map_err(|e| e.to_string())?;
    for s in 0..n {
        close(att.values[s].iter().sum::<f64>() + att.baseline, att.predictions[s], 1e-8, "tree efficiency")?;
        ensure(att.values[s][2] == 0.0, || "tree null group".into())?;
    }

    let summary = json(&store.join("identify/dimension_summary.json"))?;
    let top = summary["ranking"][0]["group"].as_str().ok_or("no ranking")?.to_string();
    let dominant = json(&store.join("db/raw/ground_truth.json"))?["dominant_dimension"]
        .as_str()
        .ok_or("no dominant dimension")?
        .to_string();
    ensure(top == dominant, || format!("{top} ranks first, planted dominant is {dominant}"))?;
    Ok(format!("efficiency, closed form, and null group hold; {top} ranks first on the synthetic store"))
}

// ---------------------------------------------------------------- 5. Sobol

fn criterion_sobol() -> Check {
    use std::f64::consts::PI;
    let (a, b) = (7.0, 0.1);
    let ishigami = move |x: &[f64]| x[0].sin() + a * x[1].sin().powi(2) + b * x[2].powi(4) * x[0].sin();
    let v1 = 0.5 * (1.0 + b * PI.powi(4) / 5.0).powi(2);
    let v2 = a * a / 8.0;
    let v13 = 8.0 * b * b * PI.powi(8) / 225.0;
    let v = v1 + v2 + v13;
    let s1 = [v1 / v, v2 / v, 0.0];
    let st = [(v1 + v13) / v, v2 / v, v13 / v];
    let names: Vec<String> = ["x1", "x2", "x3"].iter().map(|s| s.to_string()).collect();
    let mut mean_s1 = [0.0; 3];
    let mut mean_st = [0.0; 3];
    for seed in 0..5 {
        let r = sobol_pointwise(ishigami, &names, &[(-PI, PI); 3], 4096, seed).map_err(|e| e.to_string())?;
        for k in 0..3 {
            mean_s1[k] += r.s1[k] / 5.0;
            mean_st[k] += r.st[k] / 5.0;
        }
    }
    for k in 0..3 {
        close(mean_s1[k], s1[k], 0.02, &format!("Ishigami S1[{k}]"))?;
        close(mean_st[k], st[k], 0.02, &format!("Ishigami ST[{k}]"))?;
    }
    let r = sobol_pointwise(|x| x[0] + x[1], &names[..2], &[(0.0, 1.0); 2], 1000, 1).map_err(|e| e.to_string())?;
    for k in 0..2 {
        close(r.s1[k], 0.5, 0.03, "additive S1")?;
    }
    close(r.s2_of(0, 1).unwrap(), 0.0, 0.03, "additive S2")?;
    let csv = r.to_csv(&Provenance::default()).map_err(|e| e.to_string())?;
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    ensure(rows[0] == "Tasks,ST,S1,S2,STconf,S1conf,S2conf", || format!("header {}", rows[0]))?;
    ensure(rows.len() == 4 && rows[3].starts_with("x1+x2,"), || format!("rows {rows:?}"))?;
    Ok(format!(
        "Ishigami S1 ({:.3}, {:.3}, {:.3}) ST ({:.3}, {:.3}, {:.3}); additive S1 {:.3}/{:.3}",
        mean_s1[0], mean_s1[1], mean_s1[2], mean_st[0], mean_st[1], mean_st[2], r.s1[0], r.s1[1]
    ))
}

// ---------------------------------------------------------------- 6. PDP

fn criterion_pdp() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let a = uniform(&mut rng, 200, 0.0, 10.0);
    let b = uniform(&mut rng, 200, -5.0, 5.0);
    let y: Vec<f64> = a.iter().zip(&b).map(|(x, z)| 100.0 + 3.0 * x - 2.0 * z).collect();
    let t = table(vec![("load", Dimension::L, y), ("a", Dimension::G, a), ("b", Dimension::A, b)]);
    let m = fit(&ModelSpec::ridge(1e-9, 0), &t).map_err(|e| e.to_string())?;
    let slope = partial_dependence(&m, &t, "a", 25).map_err(|e| e.to_string())?.slope();
    close(slope, 3.0, 1e-6, "linear PDP slope")?;

    let n = 1500;
    let temp = uniform(&mut rng, n, 20.0, 110.0);
    let other = uniform(&mut rng, n, 0.0, 1.0);
    let y: Vec<f64> = temp.iter().zip(&other).map(|(t, o)| 500.0 + 2.0 * (t - 70.0).abs() + 5.0 * o).collect();
    let t = table(vec![("load", Dimension::L, y), ("tmax", Dimension::G, temp), ("o", Dimension::A, other)]);
    let m = fit(&ModelSpec::gbrt(GbrtParams::default(), 0), &t).map_err(|e| e.to_string())?;
    let pdp = partial_dependence(&m, &t, "tmax", 50).map_err(|e| e.to_string())?;
    let step = pdp.grid[1] - pdp.grid[0];
    ensure((pdp.argmin() - 70.0).abs() <= step, || format!("V minimum at {} (step {step})", pdp.argmin()))?;
    Ok(format!("slope {slope:.9}; V-shape minimum at {:.2} (vertex 70, step {step:.2})", pdp.argmin()))
}

// ---------------------------------------------------------------- 7. lags

fn criterion_lag(store: &Path) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let x = uniform(&mut rng, 600, -1.0, 1.0);
    for k in [1usize, 10, 50] {
        let y: Vec<f64> = (0..600).map(|t| if t >= k { 2.0 * x[t - k] + 1.0 } else { 0.0 }).collect();
        let r = lag_correlation("x", &x, &y, 60).map_err(|e| e.to_string())?;
        ensure(r.best_lag == k, || format!("shift {k} recovered as {}", r.best_lag))?;
    }
    let rows = csv_rows(&store.join("analyze/lags.csv"))?;
    let best = rows
        .iter()
        .find(|r| r[0] == "ghi" && r[3] == "yes")
        .ok_or("no best lag for ghi")?;
    let lag: i64 = best[1].parse().map_err(|_| "bad lag")?;
    ensure((lag - 50).abs() <= 2, || format!("irradiance lag {lag}"))?;
    Ok(format!("shifts 1/10/50 exact; synthetic irradiance lag {lag} days (r {})", &best[2][..7.min(best[2].len())]))
}

// ---------------------------------------------------------------- 8. schemes

fn criterion_schemes(store: &Path, pipeline: Duration) -> Check {
    let rows = csv_rows(&store.join("forecast/comparison.csv"))?;
    let mape = |scheme: &str, model: &str| -> Result<f64, String> {
        rows.iter()
            .find(|r| r[0] == scheme && r[1] == model)
            .and_then(|r| r[4].parse().ok())
            .ok_or(format!("no MAPE for {scheme}/{model}"))
    };
    let mut parts = Vec::new();
    for model in ["ridge", "gbrt", "mlp"] {
        let (s1, s5) = (mape("S1", model)?, mape("S5", model)?);
        let gain = 100.0 * (s1 - s5) / s1;
        ensure(s5 < s1 && gain >= 15.0, || format!("{model}: S1 {s1:.3} S5 {s5:.3} ({gain:.1}%)"))?;
        parts.push(format!("{model} -{gain:.1}%"));
    }

    let params = MlpParams { hidden: vec![5, 3], ..MlpParams::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let x: Vec<Vec<f64>> = (0..20).map(|_| uniform(&mut rng, 3, 0.0, 1.0)).collect();
    let y = uniform(&mut rng, 20, -1.0, 1.0);
    let mut net = Mlp::init(3, &params, 1);
    // Move the zero output layer off its initial point so every gradient is live.
    let theta: Vec<f64> = net.params_flat().iter().map(|v| v + rng.random_range(-0.3..0.3)).collect();
    net.set_params_flat(&theta);
    let (_, grad) = net.loss_and_grad(&x, &y);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for k in 0..theta.len() {
        let mut p = theta.clone();
        p[k] += h;
        net.set_params_flat(&p);
        let up = net.loss_and_grad(&x, &y).0;
        p[k] -= 2.0 * h;
        net.set_params_flat(&p);
        let down = net.loss_and_grad(&x, &y).0;
        worst = worst.max(((up - down) / (2.0 * h) - grad[k]).abs());
    }
    ensure(worst <= 1e-4, || format!("MLP gradient error {worst}"))?;
    ensure(pipeline < Duration::from_secs(300), || format!("pipeline took {pipeline:?}"))?;
    Ok(format!(
        "S5 vs S1 MAPE: {}; MLP gradient error {worst:.1e}; pipeline {:.1}s",
        parts.join(", "),
        pipeline.as_secs_f64()
    ))
}

// ---------------------------------------------------------------- 9. reruns

fn criterion_reproducible(first: &Path, scratch: &Path) -> Check {
    let second = scratch.join("rerun");
    loadfeat(&second, &["pipeline"])?;
    let (a, b) = (tree(first), tree(&second));
    ensure(a.len() == b.len(), || format!("{} vs {} files", a.len(), b.len()))?;
    for (path, bytes) in &a {
        ensure(b.get(path) == Some(bytes), || format!("{} differs between runs", path.display()))?;
    }
    // Single subcommands over an existing tree rewrite identical bytes.
    for cmd in [&["identify", "features"][..], &["forecast", "compare"], &["analyze", "lag"], &["report"]] {
        loadfeat(&second, cmd)?;
    }
    let c = tree(&second);
    ensure(a == c, || "subcommand rerun changed an artifact".into())?;
    Ok(format!("{} artifacts byte-identical across pipeline and subcommand reruns", a.len()))
}

// ---------------------------------------------------------------- driver

fn main() {
    let scratch = tempfile::tempdir().expect("temp dir");
    let store = scratch.path().join("pipeline");
    let noiseless = scratch.path().join("noiseless");

    let started = Instant::now();
    let setup = loadfeat(&store, &["pipeline"]);
    let pipeline_time = started.elapsed();
    let started = Instant::now();
    let setup0 = ["db synth", "db ingest", "db impute", "identify features"]
        .iter()
        .try_for_each(|c| {
            let mut args = vec!["--set", "store.synth.noise=0"];
            args.extend(c.split(' '));
            loadfeat(&noiseless, &args)
        });
    let noiseless_time = started.elapsed();
    let need = |r: &Result<(), String>| r.clone().map_err(|e| format!("setup failed: {e}"));

    type Run<'a> = Box<dyn Fn() -> Check + 'a>;
    let criteria: Vec<(&str, u64, Run)> = vec![
        ("DCW oracle", 1, Box::new(criterion_dcw)),
        ("k-means", 5, Box::new(criterion_kmeans)),
        ("LV-KB", 10, Box::new(|| {
            need(&setup)?;
            need(&setup0)?;
            criterion_lvkb(&store, &noiseless)
        })),
        ("Grouped Shapley", 30, Box::new(|| {
            need(&setup)?;
            criterion_shapley(&store)
        })),
        ("Sobol", 60, Box::new(criterion_sobol)),
        ("PDP", 10, Box::new(criterion_pdp)),
        ("Lag analysis", 10, Box::new(|| {
            need(&setup)?;
            criterion_lag(&store)
        })),
        ("Scheme comparison", 300, Box::new(|| {
            need(&setup)?;
            criterion_schemes(&store, pipeline_time)
        })),
        ("Reproducibility", 600, Box::new(|| {
            need(&setup)?;
            criterion_reproducible(&store, scratch.path())
        })),
    ];

    println!(
        "setup: synthetic pipeline {:.1}s, noiseless identification {:.1}s",
        pipeline_time.as_secs_f64(),
        noiseless_time.as_secs_f64()
    );
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let mut outcome = run();
        let dt = t0.elapsed();
        if outcome.is_ok() && dt > Duration::from_secs(*budget) {
            outcome = Err(format!("took {:.1}s, budget {budget}s", dt.as_secs_f64()));
        }
        match outcome {
            Ok(msg) => println!("[PASS] {} {name} ({:.2}s): {msg}", i + 1, dt.as_secs_f64()),
            Err(msg) => {
                failed += 1;
                println!("[FAIL] {} {name} ({:.2}s): {msg}", i + 1, dt.as_secs_f64());
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
