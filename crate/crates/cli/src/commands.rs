use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use loadfeat_core::analyze::{
    beeswarm_export, dimension_aggregate, lag_correlation, lags_csv, partial_dependence, sobol_indices,
};
use loadfeat_core::artifact::{write_json, write_text, Provenance};
use loadfeat_core::cluster::{self, assign_dimensions, clusters_csv, kmeans};
use loadfeat_core::corpus::{self, build_stats, load_corpus_dir, CooccurrenceStats};
use loadfeat_core::identify::{grouped_shapley, lvkb, sample_rows, LvkbResult};
use loadfeat_core::models::{compare_schemes, fit};
use loadfeat_core::stdb::{
    self, add_calendar_features, add_lag_features, assemble, impute, read_store, split, synth, write_store,
    FeatureTable, SchemeSpec, CALENDAR_COLUMNS,
};
use loadfeat_core::svg;

use crate::config::RunConfig;
use crate::CliError;

type Out = Result<Vec<PathBuf>, CliError>;

/// Progress line on stdout; a closed pipe is ignored.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

pub struct Ctx {
    pub cfg: RunConfig,
    pub prov: Provenance,
}

impl Ctx {
    pub fn new(cfg: RunConfig) -> Self {
        let prov = Provenance::new(cfg.hash(), cfg.seed)
            .with("dcw_threshold", cfg.corpus.dcw_threshold)
            .with("k", cfg.corpus.k)
            .with("variance_threshold", cfg.identify.variance_threshold)
            .with("kbest", cfg.identify.selection().describe())
            .with("imputation_rounds", cfg.store.imputation_rounds)
            .with("sobol_n", cfg.analyze.sobol_n);
        Ctx { cfg, prov }
    }

    pub fn out(&self, rel: &str) -> PathBuf {
        self.cfg.out_dir.join(rel)
    }

    pub fn relative(&self, p: &Path) -> String {
        p.strip_prefix(&self.cfg.out_dir).unwrap_or(p).to_string_lossy().into_owned()
    }

    fn raw_dir(&self) -> PathBuf {
        self.out("db/raw")
    }

    fn manifest(&self) -> PathBuf {
        self.cfg.store.manifest.clone().unwrap_or_else(|| self.raw_dir().join("manifest.json"))
    }

    fn raw_store(&self) -> PathBuf {
        self.out("db/4dmstd_raw.csv")
    }

    fn store_path(&self) -> PathBuf {
        self.out("db/4dmstd.csv")
    }

    fn store(&self) -> Result<FeatureTable, CliError> {
        let p = self.store_path();
        if !p.exists() {
            return Err(CliError::Validation(format!("no imputed store at {}; run `db impute` first", p.display())));
        }
        Ok(read_store(&p)?)
    }

    fn identified(&self, table: &FeatureTable) -> Result<LvkbResult, CliError> {
        let id = &self.cfg.identify;
        Ok(lvkb(table, id.variance_threshold, id.selection())?)
    }

    fn train_test(&self) -> (stdb::DateRange, stdb::DateRange) {
        (self.cfg.forecast.train.into(), self.cfg.forecast.test.into())
    }
}

fn write(path: PathBuf, text: &str, paths: &mut Vec<PathBuf>) -> Result<(), CliError> {
    write_text(&path, text)?;
    paths.push(path);
    Ok(())
}

fn corpus_stats(ctx: &Ctx) -> Result<CooccurrenceStats, CliError> {
    let c = &ctx.cfg.corpus;
    if !c.dir.is_dir() {
        return Err(CliError::Validation(format!("corpus.dir: no directory at {}", c.dir.display())));
    }
    let stopwords = match &c.stopwords {
        Some(p) => corpus::parse_stopwords(
            &std::fs::read_to_string(p)
                .map_err(|e| CliError::Validation(format!("corpus.stopwords: {}: {e}", p.display())))?,
        ),
        None => corpus::default_stopwords(),
    };
    let docs = load_corpus_dir(&c.dir, &stopwords)?;
    Ok(build_stats(&docs, c.window)?)
}

pub fn corpus_score(ctx: &Ctx) -> Out {
    let c = &ctx.cfg.corpus;
    let stats = corpus_stats(ctx)?;
    let ranking = stats.rank_features(&c.anchor, c.dcw_threshold)?;
    let prov = ctx.prov.clone().with("anchor", &c.anchor).with("window", c.window);
    let mut paths = Vec::new();
    write(ctx.out("corpus/dcw_ranking.csv"), &ranking.to_csv(&prov)?, &mut paths)?;
    let summary = serde_json::json!({
        "anchor": c.anchor,
        "vocabulary": stats.vocab().len(),
        "total_windows": stats.total_windows(),
        "window_size": stats.window_size(),
        "mutual_information": stats.mutual_information(),
        "scored": ranking.entries.len(),
        "kept": ranking.kept().count(),
        "skipped_undefined": ranking.skipped,
    });
    let p = ctx.out("corpus/corpus_summary.json");
    write_json(&p, &prov, summary)?;
    paths.push(p);
    say!(
        "scored {} words against `{}`, {} kept above {}",
        ranking.entries.len(),
        c.anchor,
        ranking.kept().count(),
        c.dcw_threshold
    );
    Ok(paths)
}

pub fn corpus_cluster(ctx: &Ctx) -> Out {
    let c = &ctx.cfg.corpus;
    let stats = corpus_stats(ctx)?;
    let ranking = stats.rank_features(&c.anchor, c.dcw_threshold)?;
    let words: Vec<String> = ranking.kept().map(|e| e.word.clone()).collect();
    if words.len() < c.k {
        return Err(CliError::Validation(format!(
            "corpus.k: only {} words pass the DCW threshold, fewer than k = {}",
            words.len(),
            c.k
        )));
    }
    let points = words
        .iter()
        .map(|w| stats.word_vector(w).map(|v| v.values))
        .collect::<Result<Vec<_>, _>>()?;
    let state = kmeans(&points, c.k, ctx.cfg.seed, c.max_iter)?;
    let lexicon = match &c.lexicon {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Validation(format!("corpus.lexicon: {}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("corpus.lexicon: {e}")))?
        }
        None => cluster::default_lexicon(),
    };
    let labels = assign_dimensions(&state, &words, &lexicon)?;
    let prov = ctx.prov.clone().with("anchor", &c.anchor).with("window", c.window);
    let mut paths = Vec::new();
    write(ctx.out("corpus/clusters.csv"), &clusters_csv(&state, &words, &labels, &prov)?, &mut paths)?;
    let mut tally: BTreeMap<&str, usize> = BTreeMap::new();
    for l in labels.values() {
        *tally.entry(l.as_str()).or_default() += 1;
    }
    say!("clustered {} words into {} clusters: {tally:?}", words.len(), c.k);
    Ok(paths)
}

pub fn db_synth(ctx: &Ctx) -> Out {
    let scfg = ctx.cfg.store.synth.to_synth(ctx.cfg.seed);
    let store = synth::generate(&scfg)?;
    let dir = ctx.raw_dir();
    let prov = ctx.prov.clone().with("noise", scfg.noise);
    synth::write(&store, &dir, &prov)?;
    say!(
        "generated {} features over {} days ({} planted)",
        store.truth.feature_count,
        store.truth.days,
        store.truth.planted.len()
    );
    Ok(vec![dir.join("manifest.json"), dir.join("ground_truth.json")])
}

pub fn db_ingest(ctx: &Ctx) -> Out {
    let manifest = ctx.manifest();
    if !manifest.is_file() {
        let hint = if ctx.cfg.store.manifest.is_none() { "; run `db synth` or set it" } else { "" };
        return Err(CliError::Validation(format!("store.manifest: no file at {}{hint}", manifest.display())));
    }
    let dir = match &ctx.cfg.store.series_dir {
        Some(d) => d.clone(),
        None => manifest.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    let series = stdb::ingest(&dir, &manifest)?;
    let table = assemble(&series, &ctx.cfg.store.target)?;
    let path = ctx.raw_store();
    write_store(&table, &path, &ctx.prov)?;
    say!(
        "assembled {} series into {} rows, {} missing cells",
        series.len(),
        table.n_rows(),
        table.missing_count()
    );
    Ok(vec![path.clone(), path.with_file_name("4dmstd_raw.meta.json")])
}

pub fn db_impute(ctx: &Ctx) -> Out {
    let raw = ctx.raw_store();
    if !raw.exists() {
        return Err(CliError::Validation(format!("no raw store at {}; run `db ingest` first", raw.display())));
    }
    let table = read_store(&raw)?;
    let missing = table.missing_count();
    let filled = impute(&table, ctx.cfg.store.imputation_rounds, ctx.cfg.seed)?;
    let path = ctx.store_path();
    write_store(&filled, &path, &ctx.prov)?;
    say!("imputed {missing} cells");
    Ok(vec![path.clone(), path.with_file_name("4dmstd.meta.json")])
}

pub fn identify_features(ctx: &Ctx) -> Out {
    let table = ctx.store()?;
    let res = ctx.identified(&table)?;
    if res.identified.is_empty() {
        eprintln!("warning: no feature passed the selection rule");
    }
    let mut paths = Vec::new();
    write(ctx.out("identify/feature_scores.csv"), &res.scores_csv(&ctx.prov)?, &mut paths)?;
    let p = ctx.out("identify/identified_counts.json");
    write_json(&p, &ctx.prov, res.counts_json())?;
    paths.push(p);
    say!("identified {} features: {:?}", res.identified.len(), res.counts);
    Ok(paths)
}

pub fn identify_dims(ctx: &Ctx) -> Out {
    let table = ctx.store()?;
    let (train, test) = ctx.train_test();
    let (tr, _) = split(&table, train, test)?;
    let spec = ctx.cfg.identify.shapley_model.spec(ctx.cfg.seed);
    let model = fit(&spec, &tr)?;
    let samples = sample_rows(tr.n_rows(), ctx.cfg.identify.shapley_samples, ctx.cfg.seed);
    let att = grouped_shapley(&model, &tr, &samples)?;
    let prov = ctx.prov.clone().with("shapley_model", spec.kind()).with("baseline", "training-mean row");
    let mut paths = Vec::new();
    write(ctx.out("identify/dimension_attribution.csv"), &att.to_csv(&tr, &prov)?, &mut paths)?;
    let p = ctx.out("identify/dimension_summary.json");
    write_json(&p, &prov, att.summary_json())?;
    paths.push(p);
    let (csv, svg) = beeswarm_export(&att, ctx.cfg.seed, &prov)?;
    write(ctx.out("identify/beeswarm.csv"), &csv, &mut paths)?;
    write(ctx.out("identify/beeswarm.svg"), &svg, &mut paths)?;
    let ranking: Vec<String> = att.ranking().iter().map(|(g, v)| format!("{g}={v:.3}")).collect();
    say!("dimension ranking by mean |attribution|: {}", ranking.join(" "));
    Ok(paths)
}

/// Resolves scheme definitions into concrete column lists over `full`.
fn resolve_schemes(
    ctx: &Ctx,
    full: &FeatureTable,
    identified: &[String],
) -> Result<(Vec<SchemeSpec>, serde_json::Value), CliError> {
    let f = &ctx.cfg.forecast;
    let target = full.target();
    let mut base: Vec<String> = f.lags.iter().map(|&k| stdb::lag_name(target, k)).collect();
    if f.calendar {
        base.extend(CALENDAR_COLUMNS.iter().map(|s| s.to_string()));
    }
    let identified_set: BTreeSet<&str> = identified.iter().map(String::as_str).collect();
    let mut resolved: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut specs = Vec::new();
    let mut notes = serde_json::Map::new();
    for def in &f.schemes {
        if resolved.contains_key(&def.id) {
            return Err(CliError::Validation(format!("forecast.schemes: duplicate id `{}`", def.id)));
        }
        let mut set: BTreeSet<String> = base.iter().cloned().collect();
        if let Some(parent) = &def.extends {
            let p = resolved.get(parent).ok_or_else(|| {
                CliError::Validation(format!("forecast.schemes: `{}` extends unknown or later scheme `{parent}`", def.id))
            })?;
            set.extend(p.iter().cloned());
        }
        let mut dropped = Vec::new();
        for name in &def.features {
            if full.column_index(name).is_none() {
                if def.identified_only {
                    dropped.push(name.clone());
                    continue;
                }
                return Err(CliError::Validation(format!("forecast.schemes: `{}` names unknown feature `{name}`", def.id)));
            }
            if def.identified_only && !identified_set.contains(name.as_str()) {
                dropped.push(name.clone());
            } else {
                set.insert(name.clone());
            }
        }
        for (col, _) in full.feature_columns() {
            if def.dimensions.contains(&col.dimension) && identified_set.contains(col.name.as_str()) {
                set.insert(col.name.clone());
            }
        }
        // Table column order keeps model inputs stable.
        let included: Vec<String> = full.feature_names().into_iter().filter(|n| set.contains(n)).collect();
        notes.insert(
            def.id.clone(),
            serde_json::json!({ "features": included, "dropped_not_identified": dropped }),
        );
        specs.push(SchemeSpec { id: def.id.clone(), included: included.clone() });
        resolved.insert(def.id.clone(), set);
    }
    Ok((specs, serde_json::Value::Object(notes)))
}

pub fn forecast_compare(ctx: &Ctx) -> Out {
    let table = ctx.store()?;
    let res = ctx.identified(&table)?;
    let f = &ctx.cfg.forecast;
    let target = table.target().to_string();
    let mut full = add_lag_features(&table, &target, &f.lags)?;
    if f.calendar {
        full = add_calendar_features(&full)?;
    }
    let (schemes, notes) = resolve_schemes(ctx, &full, &res.identified)?;
    let specs: Vec<_> = f.models.iter().map(|m| m.spec(ctx.cfg.seed)).collect();
    let (train, test) = ctx.train_test();
    let report = compare_schemes(&full, &schemes, &specs, train, test)?;
    let prov = ctx
        .prov
        .clone()
        .with("train", format!("{}..{}", f.train.start, f.train.end))
        .with("test", format!("{}..{}", f.test.start, f.test.end));
    let mut paths = Vec::new();
    write(ctx.out("forecast/comparison.csv"), &report.to_csv(&prov)?, &mut paths)?;
    write(ctx.out("forecast/comparison.svg"), &report.to_svg(&prov), &mut paths)?;
    let p = ctx.out("forecast/schemes.json");
    write_json(&p, &prov, notes)?;
    paths.push(p);
    for row in &report.rows {
        say!(
            "{:>4} {:>6}  features {:>3}  MAPE {:7.3}%  RMSE {:8.3}  MAE {:8.3}",
            row.scheme, row.model, row.features, row.metrics.mape, row.metrics.rmse, row.metrics.mae
        );
    }
    Ok(paths)
}

pub fn analyze_sobol(ctx: &Ctx) -> Out {
    let table = ctx.store()?;
    let res = ctx.identified(&table)?;
    let agg = dimension_aggregate(&table.select_columns(&res.identified)?)?;
    let (train, test) = ctx.train_test();
    let (tr, _) = split(&agg, train, test)?;
    let spec = ctx.cfg.analyze.sobol_model.spec(ctx.cfg.seed);
    let model = fit(&spec, &tr)?;
    let names = tr.feature_names();
    let bounds = vec![(0.0, 1.0); names.len()];
    let report = sobol_indices(|rows: &[Vec<f64>]| model.predict_rows(rows), &names, &bounds, ctx.cfg.analyze.sobol_n, ctx.cfg.seed)?;
    let prov = ctx
        .prov
        .clone()
        .with("sobol_model", spec.kind())
        .with("aggregate", "mean of min-max normalized identified features");
    let mut paths = Vec::new();
    write(ctx.out("analyze/sobol.csv"), &report.to_csv(&prov)?, &mut paths)?;
    let svg = svg::grouped_bars(
        "Sobol indices by dimension",
        "index",
        &report.names,
        &["ST".to_string(), "S1".to_string()],
        &[report.st.clone(), report.s1.clone()],
        &prov,
    );
    write(ctx.out("analyze/sobol.svg"), &svg, &mut paths)?;
    let line: Vec<String> = report.names.iter().zip(&report.st).map(|(n, s)| format!("{n}={s:.3}")).collect();
    say!("total-order indices: {}", line.join(" "));
    Ok(paths)
}

pub fn analyze_pdp(ctx: &Ctx) -> Out {
    let a = &ctx.cfg.analyze;
    let table = ctx.store()?;
    let res = ctx.identified(&table)?;
    let mut cols = res.identified.clone();
    for f in &a.pdp_features {
        if table.column_index(f).is_none() {
            return Err(CliError::Validation(format!("analyze.pdp_features: unknown feature `{f}`")));
        }
        if !cols.contains(f) {
            cols.push(f.clone());
        }
    }
    let sub = table.select_columns(&cols)?;
    let (train, test) = ctx.train_test();
    let (tr, _) = split(&sub, train, test)?;
    let spec = a.pdp_model.spec(ctx.cfg.seed);
    let model = fit(&spec, &tr)?;
    let prov = ctx.prov.clone().with("pdp_model", spec.kind()).with("grid", a.pdp_grid);
    let mut paths = Vec::new();
    for f in &a.pdp_features {
        let curve = partial_dependence(&model, &tr, f, a.pdp_grid)?;
        write(ctx.out(&format!("analyze/pdp_{f}.csv")), &curve.to_csv(&prov)?, &mut paths)?;
        write(ctx.out(&format!("analyze/pdp_{f}.svg")), &curve.to_svg(&prov), &mut paths)?;
        say!("pdp {f}: minimum at {:.3}", curve.argmin());
    }
    Ok(paths)
}

pub fn analyze_lag(ctx: &Ctx) -> Out {
    let a = &ctx.cfg.analyze;
    let table = ctx.store()?;
    let y = table.target_values();
    let mut reports = Vec::new();
    for f in &a.lag_features {
        let x = table
            .column(f)
            .map_err(|_| CliError::Validation(format!("analyze.lag_features: unknown feature `{f}`")))?;
        let rep = lag_correlation(f, x, y, a.max_lag)?;
        say!("lag {f}: best {} days (r = {:.4})", rep.best_lag, rep.best_r);
        reports.push(rep);
    }
    let prov = ctx.prov.clone().with("max_lag", a.max_lag);
    let mut paths = Vec::new();
    write(ctx.out("analyze/lags.csv"), &lags_csv(&reports, &prov)?, &mut paths)?;
    let series: Vec<(String, Vec<(f64, f64)>)> = reports
        .iter()
        .map(|r| (r.feature.clone(), r.correlations.iter().enumerate().map(|(k, v)| (k as f64, *v)).collect()))
        .collect();
    let svg = svg::line_chart("Lagged correlation with load", "lag (days)", "Pearson r", &series, &prov);
    write(ctx.out("analyze/lags.svg"), &svg, &mut paths)?;
    Ok(paths)
}

pub fn pipeline(ctx: &Ctx) -> Out {
    let mut stages: Vec<(&str, fn(&Ctx) -> Out)> = Vec::new();
    if ctx.cfg.store.manifest.is_none() {
        stages.push(("db synth", db_synth));
    }
    stages.extend([
        ("db ingest", db_ingest as fn(&Ctx) -> Out),
        ("db impute", db_impute),
        ("corpus score", corpus_score),
        ("corpus cluster", corpus_cluster),
        ("identify features", identify_features),
        ("identify dims", identify_dims),
        ("forecast compare", forecast_compare),
        ("analyze sobol", analyze_sobol),
        ("analyze pdp", analyze_pdp),
        ("analyze lag", analyze_lag),
        ("report", crate::report::write_report),
    ]);
    let mut all = Vec::new();
    for (name, stage) in stages {
        say!("== {name}");
        all.extend(stage(ctx)?);
    }
    Ok(all)
}
