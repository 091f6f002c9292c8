//! Synthetic feature store with planted ground truth.
//!
//! Generates daily candidate features across the four exogenous dimensions
//! plus a daily peak-load target. Twelve features drive the load:
//!
//! | feature            | dim | effect on load                               |
//! |--------------------|-----|----------------------------------------------|
//! | `tmax`             | G   | V-shape `|tmax - 70|` (equilibrium at 70 °F) |
//! | `dew_point`        | G   | linear, negative                             |
//! | `wind_speed`       | G   | linear, positive                             |
//! | `precipitation`    | G   | linear, negative                             |
//! | `ghi`              | A   | linear, negative, lagged 50 days             |
//! | `daylight_minutes` | A   | linear, negative                             |
//! | `sunshine_hours`   | A   | linear, negative                             |
//! | `methane_price`    | I   | linear, positive (monthly, dominant term)    |
//! | `coal_price`       | I   | linear, positive (monthly)                   |
//! | `gas_consumption`  | I   | linear, positive                             |
//! | `business_activity`| S   | weekday-driven, positive                     |
//! | `population_index` | S   | slow trend, positive                         |
//!
//! The remaining features are independent distractors; roughly a quarter of
//! them have raw variance below 1 so the variance filter has work to do.
//! Air temperature follows the sun with a 50-day delay, which keeps the
//! seasonal part of load in phase with the lagged irradiance term.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use chrono::{Datelike, Months, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use super::{monthly_to_daily, Cadence, Dimension, FeatureSeries, ManifestEntry};
use crate::artifact::{write_json, write_text, Provenance};
use crate::error::{Error, Result};

pub const TARGET: &str = "load";
pub const IRRADIANCE_LAG: usize = 50;
pub const EQUILIBRIUM_F: f64 = 70.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub start: NaiveDate,
    pub days: usize,
    /// Total feature count per exogenous dimension, planted ones included.
    pub counts: BTreeMap<Dimension, usize>,
    /// Standard deviation of the additive load noise.
    pub noise: f64,
    /// Number of daily features that receive missing cells.
    pub missing_columns: usize,
    /// Per-cell missing probability in those columns.
    pub missing_rate: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            start: NaiveDate::from_ymd_opt(2003, 1, 1).unwrap(),
            days: 3000,
            counts: [(Dimension::G, 24), (Dimension::A, 10), (Dimension::I, 12), (Dimension::S, 14)]
                .into_iter()
                .collect(),
            noise: 0.5,
            missing_columns: 10,
            missing_rate: 0.03,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedFeature {
    pub name: String,
    pub dimension: Dimension,
    pub form: String,
    pub coefficient: f64,
    pub lag_days: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub target: String,
    pub days: usize,
    pub feature_count: usize,
    pub planted: Vec<PlantedFeature>,
    pub distractors: Vec<String>,
    pub dominant_dimension: Dimension,
    pub irradiance_lag_days: usize,
    pub temperature_equilibrium: f64,
    pub noise: f64,
    pub load_formula: String,
}

impl GroundTruth {
    pub fn planted_names(&self) -> Vec<String> {
        self.planted.iter().map(|p| p.name.clone()).collect()
    }
}

#[derive(Debug, Clone)]
pub struct SynthStore {
    /// Target first, then features in manifest order. Monthly features keep
    /// their monthly cadence.
    pub series: Vec<FeatureSeries>,
    pub manifest: Vec<ManifestEntry>,
    pub truth: GroundTruth,
}

struct Planted {
    name: &'static str,
    dim: Dimension,
    unit: &'static str,
    form: &'static str,
    coef: f64,
    lag: usize,
}

const PLANTED: [Planted; 12] = [
    Planted { name: "tmax", dim: Dimension::G, unit: "degF", form: "abs(x - 70)", coef: 0.12, lag: 0 },
    Planted { name: "dew_point", dim: Dimension::G, unit: "degF", form: "linear", coef: -0.08, lag: 0 },
    Planted { name: "wind_speed", dim: Dimension::G, unit: "mph", form: "linear", coef: 0.3, lag: 0 },
    Planted { name: "precipitation", dim: Dimension::G, unit: "mm", form: "linear", coef: -0.3, lag: 0 },
    Planted { name: "ghi", dim: Dimension::A, unit: "kWh/m2", form: "linear", coef: -1.2, lag: IRRADIANCE_LAG },
    Planted { name: "daylight_minutes", dim: Dimension::A, unit: "min", form: "linear", coef: -0.004, lag: 0 },
    Planted { name: "sunshine_hours", dim: Dimension::A, unit: "h", form: "linear", coef: -0.6, lag: 0 },
    Planted { name: "methane_price", dim: Dimension::I, unit: "usd/MMBtu", form: "linear", coef: 2.5, lag: 0 },
    Planted { name: "coal_price", dim: Dimension::I, unit: "usd/short_ton", form: "linear", coef: 0.12, lag: 0 },
    Planted { name: "gas_consumption", dim: Dimension::I, unit: "MMcf", form: "linear", coef: 0.1, lag: 0 },
    Planted { name: "business_activity", dim: Dimension::S, unit: "index", form: "linear", coef: 0.8, lag: 0 },
    Planted { name: "population_index", dim: Dimension::S, unit: "index", form: "linear", coef: 0.5, lag: 0 },
];

const DISTRACTORS: [(Dimension, &[&str]); 4] = [
    (
        Dimension::G,
        &[
            "pressure_hpa", "visibility_mi", "snow_depth_in", "gust_spread", "soil_moisture",
            "river_flow", "fog_hours", "hail_events", "lightning_strikes", "ozone_ppb", "no2_ppb",
            "so2_ppb", "pm25", "pm10", "co_ppm", "aerosol_depth", "drought_index", "frost_depth",
            "tide_level", "pollen_count",
        ],
    ),
    (
        Dimension::A,
        &[
            "moon_phase", "sunspot_number", "solar_flux_10cm", "kp_index", "cosmic_ray_count",
            "eclipse_flag", "aurora_index",
        ],
    ),
    (
        Dimension::I,
        &[
            "crude_inventory_delta", "wind_curtailment", "hydro_spill", "biogas_output",
            "battery_cycles", "propane_inventory_delta", "nuclear_outage_flag", "ethanol_blend",
            "lng_arrivals",
        ],
    ),
    (
        Dimension::S,
        &[
            "traffic_incidents", "museum_visits", "parade_flag", "strike_flag", "election_flag",
            "social_media_volume", "news_sentiment", "crime_reports", "library_loans",
            "transit_delays", "bankruptcy_filings", "marathon_flag",
        ],
    ),
];

fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

/// AR(1) path with the given stationary standard deviation.
fn ar1(rng: &mut ChaCha8Rng, n: usize, phi: f64, sd: f64) -> Vec<f64> {
    let z = Normal::new(0.0, 1.0).unwrap();
    let innov = sd * (1.0 - phi * phi).sqrt();
    let mut x = sd * z.sample(rng);
    (0..n)
        .map(|_| {
            let v = x;
            x = phi * x + innov * z.sample(rng);
            v
        })
        .collect()
}

/// Seasonal wave peaking `delay` days after the June solstice.
fn sun_wave(d: NaiveDate, delay: f64) -> f64 {
    (2.0 * PI * (d.ordinal() as f64 - 172.0 - delay) / 365.25).cos()
}

fn month_starts(start: NaiveDate, end: NaiveDate) -> Vec<NaiveDate> {
    let mut m = start.with_day(1).unwrap();
    let mut out = Vec::new();
    while m <= end {
        out.push(m);
        m = m + Months::new(1);
    }
    out
}

fn monthly_ar(rng: &mut ChaCha8Rng, months: usize, mean: f64, phi: f64, sd: f64, floor: f64) -> Vec<f64> {
    ar1(rng, months, phi, sd)
        .into_iter()
        .map(|v| round3((mean + v).max(floor)))
        .collect()
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthStore> {
    if cfg.days < 2 * IRRADIANCE_LAG + 60 {
        return Err(Error::invalid(format!("synthetic store needs at least {} days", 2 * IRRADIANCE_LAG + 60)));
    }
    for dim in Dimension::EXOGENOUS {
        let planted = PLANTED.iter().filter(|p| p.dim == dim).count();
        let total = cfg.counts.get(&dim).copied().unwrap_or(0);
        if total < planted {
            return Err(Error::invalid(format!(
                "dimension {dim} needs at least {planted} features for its planted ones, got {total}"
            )));
        }
    }
    if !(0.0..1.0).contains(&cfg.missing_rate) || cfg.noise < 0.0 {
        return Err(Error::invalid("missing_rate must be in [0, 1) and noise non-negative"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.days;
    // Irradiance history reaches back before the first load date.
    let pre = IRRADIANCE_LAG;
    let all_dates: Vec<NaiveDate> = (cfg.start - chrono::Days::new(pre as u64))
        .iter_days()
        .take(n + pre)
        .collect();
    let dates = &all_dates[pre..];
    let end = *dates.last().unwrap();

    let tmax_noise = ar1(&mut rng, n, 0.7, 7.0);
    let tmax: Vec<f64> = dates
        .iter()
        .zip(&tmax_noise)
        .map(|(d, e)| round3(55.0 + 22.0 * sun_wave(*d, IRRADIANCE_LAG as f64) + e))
        .collect();
    let dew_noise = ar1(&mut rng, n, 0.5, 4.0);
    let dew: Vec<f64> = tmax.iter().zip(&dew_noise).map(|(t, e)| round3(0.6 * t - 3.0 + e)).collect();
    let wind: Vec<f64> = {
        let z: Normal<f64> = Normal::new(10.0, 3.0).unwrap();
        (0..n).map(|_| round3(z.sample(&mut rng).max(0.0))).collect()
    };
    let precip: Vec<f64> = {
        let e = Exp::new(1.0 / 3.0).unwrap();
        (0..n).map(|_| round3(e.sample(&mut rng))).collect()
    };
    let ghi_noise = ar1(&mut rng, n + pre, 0.8, 1.2);
    let ghi_full: Vec<f64> = all_dates
        .iter()
        .zip(&ghi_noise)
        .map(|(d, e)| round3((4.5 + 2.0 * sun_wave(*d, 0.0) + e).max(0.0)))
        .collect();
    let ghi = &ghi_full[pre..];
    let daylight: Vec<f64> = dates.iter().map(|d| round3(735.0 + 165.0 * sun_wave(*d, 0.0))).collect();
    let sunshine_noise = ar1(&mut rng, n, 0.3, 1.5);
    let sunshine: Vec<f64> = sunshine_noise.iter().map(|e| round3((8.0 + e).max(0.0))).collect();

    let months = month_starts(cfg.start, end);
    let methane_m = monthly_ar(&mut rng, months.len(), 7.0, 0.9, 2.75, 1.5);
    let coal_m = monthly_ar(&mut rng, months.len(), 45.0, 0.85, 6.0, 10.0);
    let to_daily = |name: &str, values: &[f64]| -> Result<Vec<f64>> {
        let s = FeatureSeries {
            name: name.to_string(),
            dimension: Dimension::I,
            unit: "usd".into(),
            cadence: Cadence::Monthly,
            dates: months.clone(),
            values: values.iter().map(|v| Some(*v)).collect(),
        };
        let daily = monthly_to_daily(&s)?;
        Ok(daily.values.iter().take(n).map(|v| v.unwrap()).collect())
    };
    let methane = to_daily("methane_price", &methane_m)?;
    let coal = to_daily("coal_price", &coal_m)?;
    let gas_noise = ar1(&mut rng, n, 0.6, 5.0);
    let gas: Vec<f64> = dates
        .iter()
        .zip(&gas_noise)
        .map(|(d, e)| round3(50.0 - 15.0 * sun_wave(*d, IRRADIANCE_LAG as f64) + e))
        .collect();
    let business: Vec<f64> = {
        let z = Normal::new(0.0, 0.6).unwrap();
        dates
            .iter()
            .map(|d| {
                let base = if d.weekday().num_days_from_monday() < 5 { 5.0 } else { 1.5 };
                round3(base + z.sample(&mut rng))
            })
            .collect()
    };
    let population: Vec<f64> = {
        let z = Normal::new(0.0, 0.05).unwrap();
        (0..n)
            .map(|t| round3(100.0 + 8.0 * t as f64 / n as f64 + z.sample(&mut rng)))
            .collect()
    };

    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let centered = |xs: &[f64]| {
        let m = mean(xs);
        xs.iter().map(|x| x - m).collect::<Vec<_>>()
    };
    let ghi_mean = mean(&ghi_full);
    let daily_planted: Vec<(&Planted, Vec<f64>)> = vec![
        (&PLANTED[0], tmax.clone()),
        (&PLANTED[1], dew.clone()),
        (&PLANTED[2], wind.clone()),
        (&PLANTED[3], precip.clone()),
        (&PLANTED[4], ghi.to_vec()),
        (&PLANTED[5], daylight.clone()),
        (&PLANTED[6], sunshine.clone()),
        (&PLANTED[7], methane.clone()),
        (&PLANTED[8], coal.clone()),
        (&PLANTED[9], gas.clone()),
        (&PLANTED[10], business.clone()),
        (&PLANTED[11], population.clone()),
    ];

    let noise = Normal::new(0.0, 1.0).unwrap();
    let terms: Vec<Vec<f64>> = daily_planted
        .iter()
        .enumerate()
        .map(|(k, (p, x))| match k {
            0 => x.iter().map(|t| p.coef * (t - EQUILIBRIUM_F).abs()).collect(),
            4 => (0..n).map(|t| p.coef * (ghi_full[t] - ghi_mean)).collect(),
            _ => centered(x).iter().map(|v| p.coef * v).collect(),
        })
        .collect();
    let load: Vec<f64> = (0..n)
        .map(|t| {
            let exo: f64 = terms.iter().map(|term| term[t]).sum();
            round3(60.0 + exo + cfg.noise * noise.sample(&mut rng))
        })
        .collect();

    let mut series = vec![FeatureSeries {
        name: TARGET.to_string(),
        dimension: Dimension::L,
        unit: "GW_x10".into(),
        cadence: Cadence::Daily,
        dates: dates.to_vec(),
        values: load.iter().map(|v| Some(*v)).collect(),
    }];
    let daily = |name: &str, dim: Dimension, unit: &str, values: &[f64]| FeatureSeries {
        name: name.to_string(),
        dimension: dim,
        unit: unit.to_string(),
        cadence: Cadence::Daily,
        dates: dates.to_vec(),
        values: values.iter().map(|v| Some(*v)).collect(),
    };
    for (p, values) in &daily_planted {
        if p.name == "methane_price" || p.name == "coal_price" {
            let monthly = if p.name == "methane_price" { &methane_m } else { &coal_m };
            series.push(FeatureSeries {
                name: p.name.to_string(),
                dimension: p.dim,
                unit: p.unit.to_string(),
                cadence: Cadence::Monthly,
                dates: months.clone(),
                values: monthly.iter().map(|v| Some(*v)).collect(),
            });
        } else {
            series.push(daily(p.name, p.dim, p.unit, values));
        }
    }

    let mut distractors = Vec::new();
    for (dim, names) in DISTRACTORS {
        let planted = PLANTED.iter().filter(|p| p.dim == dim).count();
        let wanted = cfg.counts.get(&dim).copied().unwrap_or(0) - planted;
        for k in 0..wanted {
            let name = names
                .get(k)
                .map(|s| s.to_string())
                .unwrap_or_else(|| format!("{}_extra_{}", dim.long_name(), k + 1 - names.len()));
            let values = distractor(&mut rng, n, k);
            series.push(daily(&name, dim, "unit", &values));
            distractors.push(name);
        }
    }

    // Punch holes into a few daily features; the target stays complete.
    let candidates: Vec<usize> = (1..series.len())
        .filter(|&i| series[i].cadence == Cadence::Daily)
        .collect();
    let mut chosen = Vec::new();
    while chosen.len() < cfg.missing_columns.min(candidates.len()) {
        let c = candidates[rng.random_range(0..candidates.len())];
        if !chosen.contains(&c) {
            chosen.push(c);
        }
    }
    chosen.sort_unstable();
    for &c in &chosen {
        for v in series[c].values.iter_mut() {
            if rng.random::<f64>() < cfg.missing_rate {
                *v = None;
            }
        }
    }

    let manifest = series
        .iter()
        .map(|s| ManifestEntry {
            file: format!("{}.csv", s.name),
            name: s.name.clone(),
            dimension: s.dimension.tag().to_string(),
            unit: s.unit.clone(),
            cadence: match s.cadence {
                Cadence::Daily => "daily".into(),
                Cadence::Monthly => "monthly".into(),
            },
        })
        .collect();

    let truth = GroundTruth {
        target: TARGET.to_string(),
        days: n,
        feature_count: series.len() - 1,
        planted: PLANTED
            .iter()
            .map(|p| PlantedFeature {
                name: p.name.to_string(),
                dimension: p.dim,
                form: p.form.to_string(),
                coefficient: p.coef,
                lag_days: p.lag,
            })
            .collect(),
        distractors,
        dominant_dimension: Dimension::I,
        irradiance_lag_days: IRRADIANCE_LAG,
        temperature_equilibrium: EQUILIBRIUM_F,
        noise: cfg.noise,
        load_formula: "load = 60 + 0.12*|tmax-70| + sum_k coef_k*(x_k - mean x_k) + noise, \
                       with ghi entering at t-50"
            .to_string(),
    };
    Ok(SynthStore { series, manifest, truth })
}

/// Independent distractor. Every fourth one has raw variance below 1.
fn distractor(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<f64> {
    let z = Normal::new(0.0, 1.0).unwrap();
    if k % 4 == 3 {
        // Low variance: either a rare flag or a narrow gauge.
        if k % 8 == 3 {
            let p = 0.05 + 0.1 * rng.random::<f64>();
            (0..n).map(|_| (rng.random::<f64>() < p) as u8 as f64).collect()
        } else {
            let sd = 0.2 + 0.5 * rng.random::<f64>();
            let loc = 1.0 + 5.0 * rng.random::<f64>();
            (0..n).map(|_| round3(loc + sd * z.sample(rng))).collect()
        }
    } else {
        let sd = 1.5 + 18.0 * rng.random::<f64>();
        let loc = 10.0 + 90.0 * rng.random::<f64>();
        if k % 2 == 0 {
            (0..n).map(|_| round3(loc + sd * z.sample(rng))).collect()
        } else {
            let e = Exp::new(1.0).unwrap();
            (0..n).map(|_| round3(loc + sd * e.sample(rng))).collect()
        }
    }
}

/// Writes one CSV per series, `manifest.json`, and `ground_truth.json`.
pub fn write(store: &SynthStore, dir: &Path, prov: &Provenance) -> Result<()> {
    for s in &store.series {
        write_text(&dir.join(format!("{}.csv", s.name)), &super::series_csv(s, prov)?)?;
    }
    let manifest = serde_json::to_string_pretty(&store.manifest)? + "\n";
    write_text(&dir.join("manifest.json"), &manifest)?;
    write_json(&dir.join("ground_truth.json"), prov, serde_json::to_value(&store.truth)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_shape() {
        let s = generate(&SynthConfig::default()).unwrap();
        assert_eq!(s.truth.days, 3000);
        assert_eq!(s.truth.feature_count, 60);
        assert_eq!(s.truth.planted.len(), 12);
        assert_eq!(s.series.len(), 61);
        assert_eq!(s.series[0].len(), 3000);
        assert!(s.series[0].values.iter().all(|v| v.is_some()));
    }

    #[test]
    fn too_few_features_rejected() {
        let mut cfg = SynthConfig::default();
        cfg.counts.insert(Dimension::G, 2);
        assert!(generate(&cfg).is_err());
    }

    #[test]
    fn seeded() {
        let a = generate(&SynthConfig::default()).unwrap();
        let b = generate(&SynthConfig::default()).unwrap();
        assert_eq!(a.series, b.series);
        let mut cfg = SynthConfig::default();
        cfg.seed = 7;
        assert_ne!(generate(&cfg).unwrap().series[0], a.series[0]);
    }
}
