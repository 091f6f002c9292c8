use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use loadfeat_core::analyze::{MAX_SAMPLES, MIN_SAMPLES};
use loadfeat_core::identify::{Selection, DEFAULT_KBEST_THRESHOLD, DEFAULT_VARIANCE_THRESHOLD};
use loadfeat_core::models::{GbrtParams, Hyperparameters, MlpParams, ModelSpec};
use loadfeat_core::stdb::{synth::SynthConfig, DateRange, Dimension};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::CliError;

/// Whole-run configuration. Every section has defaults, so `{}` is a valid
/// config file; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Output root. Not part of the config hash.
    pub out_dir: PathBuf,
    /// Worker threads; 0 means all cores. Not part of the config hash.
    pub threads: usize,
    pub corpus: CorpusConfig,
    pub store: StoreConfig,
    pub identify: IdentifyConfig,
    pub forecast: ForecastConfig,
    pub analyze: AnalyzeConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            out_dir: PathBuf::from("out"),
            threads: 0,
            corpus: CorpusConfig::default(),
            store: StoreConfig::default(),
            identify: IdentifyConfig::default(),
            forecast: ForecastConfig::default(),
            analyze: AnalyzeConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub dir: PathBuf,
    /// Stopword file, one word per line; the bundled English list when absent.
    pub stopwords: Option<PathBuf>,
    pub anchor: String,
    pub window: usize,
    pub dcw_threshold: f64,
    pub k: usize,
    pub max_iter: usize,
    /// JSON map of dimension name to word list; the bundled lexicon when absent.
    pub lexicon: Option<PathBuf>,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            dir: PathBuf::from("data/corpus"),
            stopwords: None,
            anchor: "load".into(),
            window: loadfeat_core::corpus::DEFAULT_WINDOW,
            dcw_threshold: 0.1,
            k: loadfeat_core::cluster::DEFAULT_K,
            max_iter: 100,
            lexicon: None,
        }
    }
}

/// Generator settings; the generator seed is the run seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub start: NaiveDate,
    pub days: usize,
    pub counts: BTreeMap<Dimension, usize>,
    pub noise: f64,
    pub missing_columns: usize,
    pub missing_rate: f64,
}

impl Default for SynthSection {
    fn default() -> Self {
        let d = SynthConfig::default();
        SynthSection {
            start: d.start,
            days: d.days,
            counts: d.counts,
            noise: d.noise,
            missing_columns: d.missing_columns,
            missing_rate: d.missing_rate,
        }
    }
}

impl SynthSection {
    pub fn to_synth(&self, seed: u64) -> SynthConfig {
        SynthConfig {
            start: self.start,
            days: self.days,
            counts: self.counts.clone(),
            noise: self.noise,
            missing_columns: self.missing_columns,
            missing_rate: self.missing_rate,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StoreConfig {
    /// Manifest of per-feature CSVs. When absent, `db synth` output under
    /// `<out_dir>/db/raw` is used.
    pub manifest: Option<PathBuf>,
    /// Directory the manifest's file entries resolve against; defaults to
    /// the manifest's own directory.
    pub series_dir: Option<PathBuf>,
    pub target: String,
    pub imputation_rounds: usize,
    pub synth: SynthSection,
}

impl Default for StoreConfig {
    fn default() -> Self {
        StoreConfig {
            manifest: None,
            series_dir: None,
            target: loadfeat_core::stdb::synth::TARGET.into(),
            imputation_rounds: 5,
            synth: SynthSection::default(),
        }
    }
}

/// Model hyperparameters without a seed; the run seed is attached at use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEntry {
    #[serde(flatten)]
    pub params: Hyperparameters,
}

impl ModelEntry {
    pub fn spec(&self, seed: u64) -> ModelSpec {
        ModelSpec { params: self.params.clone(), seed }
    }

    fn ridge() -> Self {
        ModelEntry { params: Hyperparameters::Ridge { lambda: 1e-3 } }
    }

    fn gbrt() -> Self {
        ModelEntry { params: Hyperparameters::Gbrt(GbrtParams::default()) }
    }

    fn mlp() -> Self {
        ModelEntry { params: Hyperparameters::Mlp(MlpParams::default()) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentifyConfig {
    pub variance_threshold: f64,
    pub kbest_threshold: f64,
    /// Keep the top K by F-score instead of thresholding.
    pub top_k: Option<usize>,
    pub shapley_model: ModelEntry,
    pub shapley_samples: usize,
}

impl Default for IdentifyConfig {
    fn default() -> Self {
        IdentifyConfig {
            variance_threshold: DEFAULT_VARIANCE_THRESHOLD,
            kbest_threshold: DEFAULT_KBEST_THRESHOLD,
            top_k: None,
            shapley_model: ModelEntry::gbrt(),
            shapley_samples: 300,
        }
    }
}

impl IdentifyConfig {
    pub fn selection(&self) -> Selection {
        match self.top_k {
            Some(k) => Selection::TopK(k),
            None => Selection::Threshold(self.kbest_threshold),
        }
    }
}

/// One feature scheme: load lags and calendar columns, plus features from
/// `extends`, the listed features, and everything identified in the listed
/// dimensions. With `identified_only`, listed features that were not
/// identified are left out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeDef {
    pub id: String,
    #[serde(default)]
    pub extends: Option<String>,
    #[serde(default)]
    pub features: Vec<String>,
    #[serde(default)]
    pub dimensions: Vec<Dimension>,
    #[serde(default = "yes")]
    pub identified_only: bool,
}

fn yes() -> bool {
    true
}

fn scheme(id: &str, extends: Option<&str>, features: &[&str], dimensions: &[Dimension]) -> SchemeDef {
    SchemeDef {
        id: id.into(),
        extends: extends.map(str::to_string),
        features: features.iter().map(|s| s.to_string()).collect(),
        dimensions: dimensions.to_vec(),
        identified_only: true,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl From<Range> for DateRange {
    fn from(r: Range) -> Self {
        DateRange::new(r.start, r.end)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForecastConfig {
    pub lags: Vec<usize>,
    pub calendar: bool,
    pub schemes: Vec<SchemeDef>,
    pub models: Vec<ModelEntry>,
    pub train: Range,
    pub test: Range,
}

impl Default for ForecastConfig {
    fn default() -> Self {
        use Dimension::*;
        let d = |s: &str| s.parse::<NaiveDate>().unwrap();
        ForecastConfig {
            lags: (1..=7).collect(),
            calendar: true,
            schemes: vec![
                scheme("S1", None, &[], &[]),
                scheme("S2", Some("S1"), &["tmax", "dew_point", "wind_speed"], &[]),
                scheme("S3", Some("S2"), &[], &[S]),
                scheme("S4", Some("S3"), &["coal_price", "gas_consumption", "sunshine_hours"], &[]),
                scheme("S5", Some("S4"), &[], &[G, A, I, S]),
            ],
            models: vec![ModelEntry::ridge(), ModelEntry::gbrt(), ModelEntry::mlp()],
            train: Range { start: d("2003-01-01"), end: d("2009-12-31") },
            test: Range { start: d("2010-01-01"), end: d("2011-03-19") },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyzeConfig {
    pub sobol_n: usize,
    pub sobol_model: ModelEntry,
    pub pdp_model: ModelEntry,
    pub pdp_features: Vec<String>,
    pub pdp_grid: usize,
    pub lag_features: Vec<String>,
    pub max_lag: usize,
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        AnalyzeConfig {
            sobol_n: 1000,
            sobol_model: ModelEntry::mlp(),
            pdp_model: ModelEntry::gbrt(),
            pdp_features: vec!["tmax".into(), "methane_price".into()],
            pdp_grid: 50,
            lag_features: vec!["ghi".into()],
            max_lag: 120,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<RunConfig, CliError> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("config: cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))
    }

    /// Applies `key.path=value` overrides. The value is parsed as JSON when
    /// possible and taken as a string otherwise.
    pub fn with_overrides(self, sets: &[String]) -> Result<RunConfig, CliError> {
        if sets.is_empty() {
            return Ok(self);
        }
        let mut root = serde_json::to_value(&self).map_err(|e| CliError::Runtime(e.to_string()))?;
        for set in sets {
            let (key, raw) = set
                .split_once('=')
                .ok_or_else(|| CliError::Validation(format!("--set expects key=value, got `{set}`")))?;
            let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            let mut node = &mut root;
            for part in key.split('.') {
                node = match node {
                    Value::Object(map) if map.contains_key(part) => map.get_mut(part).unwrap(),
                    Value::Array(items) => part
                        .parse::<usize>()
                        .ok()
                        .and_then(|i| items.get_mut(i))
                        .ok_or_else(|| CliError::Validation(format!("unknown config key `{key}`")))?,
                    _ => return Err(CliError::Validation(format!("unknown config key `{key}`"))),
                };
            }
            *node = value;
        }
        serde_json::from_value(root).map_err(|e| CliError::Validation(format!("config override: {e}")))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |key: &str, why: &str| Err(CliError::Validation(format!("{key}: {why}")));
        if self.corpus.window < 2 {
            return bad("corpus.window", "must be at least 2");
        }
        if self.corpus.k == 0 || self.corpus.max_iter == 0 {
            return bad("corpus.k", "k and max_iter must be positive");
        }
        if !self.corpus.dcw_threshold.is_finite() {
            return bad("corpus.dcw_threshold", "must be finite");
        }
        let id = &self.identify;
        if !(id.variance_threshold >= 0.0 && id.variance_threshold.is_finite()) {
            return bad("identify.variance_threshold", "must be a finite value >= 0");
        }
        if !(id.kbest_threshold >= 0.0 && id.kbest_threshold.is_finite()) {
            return bad("identify.kbest_threshold", "must be a finite value >= 0");
        }
        if id.top_k == Some(0) {
            return bad("identify.top_k", "must be positive when set");
        }
        let sy = &self.store.synth;
        if !(sy.noise >= 0.0 && sy.noise.is_finite()) {
            return bad("store.synth.noise", "must be a finite value >= 0");
        }
        if !(0.0..1.0).contains(&sy.missing_rate) {
            return bad("store.synth.missing_rate", "must lie in [0, 1)");
        }
        if self.forecast.lags.contains(&0) {
            return bad("forecast.lags", "lags must be positive");
        }
        if self.analyze.sobol_n < MIN_SAMPLES || self.analyze.sobol_n > MAX_SAMPLES {
            return bad("analyze.sobol_n", &format!("must lie in {MIN_SAMPLES}..={MAX_SAMPLES}"));
        }
        if self.store.imputation_rounds == 0 {
            return bad("store.imputation_rounds", "must be positive");
        }
        if self.identify.shapley_samples == 0 {
            return bad("identify.shapley_samples", "must be positive");
        }
        if self.forecast.schemes.is_empty() {
            return bad("forecast.schemes", "at least one scheme is required");
        }
        if self.forecast.train.end >= self.forecast.test.start {
            return bad("forecast.test", "test range must start after the train range ends");
        }
        if self.analyze.pdp_grid < 2 {
            return bad("analyze.pdp_grid", "must be at least 2");
        }
        for (key, m) in [
            ("identify.shapley_model", &self.identify.shapley_model),
            ("analyze.sobol_model", &self.analyze.sobol_model),
            ("analyze.pdp_model", &self.analyze.pdp_model),
        ]
        .into_iter()
        .chain(self.forecast.models.iter().map(|m| ("forecast.models", m)))
        {
            if let Err(e) = m.spec(self.seed).validate() {
                return bad(key, &e.to_string());
            }
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON of everything that shapes results.
    pub fn hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Value::Object(map) = &mut v {
            map.remove("out_dir");
            map.remove("threads");
        }
        let digest = Sha256::digest(v.to_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_default_and_round_trips() {
        let c: RunConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(c, RunConfig::default());
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), c);
        c.validate().unwrap();
    }

    #[test]
    fn overrides_and_hash() {
        let c = RunConfig::default();
        let h = c.hash();
        let c2 = c.clone().with_overrides(&["identify.kbest_threshold=12".into(), "out_dir=elsewhere".into()]).unwrap();
        assert_eq!(c2.identify.kbest_threshold, 12.0);
        assert_eq!(c2.out_dir, PathBuf::from("elsewhere"));
        assert_ne!(c2.hash(), h);
        let c3 = c.clone().with_overrides(&["out_dir=x".into(), "threads=3".into()]).unwrap();
        assert_eq!(c3.hash(), h);
        assert!(c.clone().with_overrides(&["identify.nope=1".into()]).is_err());
        assert!(c.clone().with_overrides(&["seed".into()]).is_err());
        let c4 = c.with_overrides(&["forecast.schemes.0.id=base".into()]).unwrap();
        assert_eq!(c4.forecast.schemes[0].id, "base");
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"sead": 1}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"identify": {"threshold": 1}}"#).is_err());
    }
}
