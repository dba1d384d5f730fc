//! Synthetic study data: PV plants, forecast ensembles and market prices.
//!
//! Realized PV is a clear-sky bell profile times a seasonal peak factor times
//! a Beta-distributed attenuation. Attenuation follows a Gaussian AR(1)
//! latent process mapped through the Beta quantile; plants share part of the
//! latent weather. Forecasts are ensembles around a centre whose error has
//! the same law as the members' spread (truth is exchangeable with a member),
//! with spread growing with lead time. Spot prices are a daily shape plus a
//! mean-reverting deviation; balancing prices are spot plus or minus Gamma
//! spreads, and a two-state Markov regime with stationary probability
//! `inverted_probability` makes both imbalance directions remunerative.

use std::path::{Path, PathBuf};

use chrono::{DateTime, Datelike, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF, Normal};

use pvbess_core::forecast::{ForecastDistribution, ForecastStore};
use pvbess_core::market::{PriceRecord, PriceSeries};
use pvbess_core::simulator::{mix_seed, PlantSpec, PvSeries, PRICE_LEAD};
use pvbess_core::time::DAY_AHEAD_GATE_OFFSET;
use pvbess_core::{Ptu, PTUS_PER_DAY, PTU_HOURS};

use crate::config::{AggregationConfig, BatteryConfig, MpcSection, PeriodConfig, PlantConfig, PricesConfig, RunConfig};
use crate::error::{CliError, CliResult};
use crate::ingest;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub seed: u64,
    /// First delivered day, a UTC midnight.
    pub start: DateTime<Utc>,
    pub days: u32,
    #[serde(default = "default_plants")]
    pub plants: Vec<SynthPlant>,
    #[serde(default)]
    pub weather: WeatherSpec,
    #[serde(default)]
    pub forecast: ForecastSpec,
    #[serde(default)]
    pub prices: PriceSpec,
    /// Battery and controller sections copied into the generated run config.
    #[serde(default)]
    pub run: RunTemplate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthPlant {
    pub name: String,
    pub capacity_mwp: f64,
}

fn default_plants() -> Vec<SynthPlant> {
    vec![SynthPlant { name: "plant".into(), capacity_mwp: 2.7 }]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeatherSpec {
    /// Off: realized PV equals the clear-sky profile.
    pub attenuation: bool,
    pub beta_a: f64,
    pub beta_b: f64,
    /// Per-PTU autocorrelation of the latent weather.
    pub persistence: f64,
    /// Share of latent weather variance common to all plants.
    pub shared: f64,
}

impl Default for WeatherSpec {
    fn default() -> Self {
        Self { attenuation: true, beta_a: 4.0, beta_b: 1.5, persistence: 0.97, shared: 0.5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForecastSpec {
    pub members: usize,
    /// Error standard deviation at lead 0, as a fraction of clear-sky energy.
    pub sigma_min: f64,
    /// Error standard deviation at leads of 36 hours and beyond.
    pub sigma_max: f64,
    /// Autocorrelation of errors between consecutive targets of one issue.
    pub persistence: f64,
    /// Targets covered by the issues made at every PTU.
    pub short_coverage: usize,
}

impl Default for ForecastSpec {
    fn default() -> Self {
        Self { members: 20, sigma_min: 0.05, sigma_max: 0.25, persistence: 0.9, short_coverage: 25 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PriceSpec {
    pub spot_mean: f64,
    pub spot_amplitude: f64,
    /// Per-PTU mean reversion rate of the spot deviation.
    pub reversion: f64,
    pub volatility: f64,
    pub spread_mean: f64,
    pub inverted_probability: f64,
    /// Extra probability of staying in the current regime.
    pub inverted_persistence: f64,
}

impl Default for PriceSpec {
    fn default() -> Self {
        Self {
            spot_mean: 50.0,
            spot_amplitude: 15.0,
            reversion: 0.1,
            volatility: 3.0,
            spread_mean: 10.0,
            inverted_probability: 0.0,
            inverted_persistence: 0.8,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunTemplate {
    #[serde(default)]
    pub battery: Option<BatteryConfig>,
    #[serde(default)]
    pub mpc: MpcSection,
    #[serde(default)]
    pub aggregation: AggregationConfig,
}

impl GeneratorSpec {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read generator spec {}: {e}", path.display())))?;
        let spec: Self = toml::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> CliResult<()> {
        let start = Ptu::from_datetime(self.start).map_err(|e| CliError::config(format!("start: {e}")))?;
        if start.slot_of_day() != 0 {
            return Err(CliError::config("start must be a UTC midnight"));
        }
        if self.days == 0 {
            return Err(CliError::config("days must be at least 1"));
        }
        if self.plants.is_empty() || self.plants.iter().any(|p| !(p.capacity_mwp > 0.0)) {
            return Err(CliError::config("plants: need at least one plant with positive capacity"));
        }
        let w = &self.weather;
        if !(w.beta_a > 0.0 && w.beta_b > 0.0 && (0.0..1.0).contains(&w.persistence) && (0.0..=1.0).contains(&w.shared)) {
            return Err(CliError::config("weather: need beta_a, beta_b > 0, persistence in [0, 1), shared in [0, 1]"));
        }
        let f = &self.forecast;
        if f.members == 0 || !(0.0..=f.sigma_max).contains(&f.sigma_min) || !(0.0..1.0).contains(&f.persistence) || f.short_coverage == 0 {
            return Err(CliError::config("forecast: need members >= 1, 0 <= sigma_min <= sigma_max, persistence in [0, 1), short_coverage >= 1"));
        }
        let p = &self.prices;
        if !(0.0..=1.0).contains(&p.inverted_probability) || !(0.0..1.0).contains(&p.inverted_persistence) || !(p.spread_mean > 0.0) || !(0.0..=1.0).contains(&p.reversion) {
            return Err(CliError::config(
                "prices: need inverted_probability in [0, 1], inverted_persistence in [0, 1), spread_mean > 0, reversion in [0, 1]",
            ));
        }
        Ok(())
    }

    pub fn period(&self) -> (Ptu, Ptu) {
        let start = Ptu::from_datetime(self.start).expect("validated");
        (start, start + self.days as i64 * PTUS_PER_DAY)
    }
}

/// Generated data for every plant plus the shared price series.
#[derive(Clone, Debug)]
pub struct SynthData {
    pub start: Ptu,
    pub end: Ptu,
    pub plants: Vec<PlantSpec>,
    pub prices: PriceSeries,
}

/// Clear-sky PV energy of a `capacity` MWp plant over PTU `q`.
pub fn clear_sky_energy(capacity: f64, q: Ptu) -> f64 {
    let doy = q.to_datetime().ordinal() as f64;
    let season = (2.0 * std::f64::consts::PI * (doy - 80.0) / 365.25).sin();
    let day_length = 12.0 + 3.5 * season;
    let sunrise = 12.0 - day_length / 2.0;
    let hour = q.slot_of_day() as f64 * PTU_HOURS + PTU_HOURS / 2.0;
    let x = (hour - sunrise) / day_length;
    if !(0.0..1.0).contains(&x) {
        return 0.0;
    }
    let peak = 0.62 + 0.28 * season;
    capacity * PTU_HOURS * peak * (std::f64::consts::PI * x).sin().powf(1.3)
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Standard Gaussian AR(1) path of length `n`.
fn ar1(rng: &mut ChaCha8Rng, n: usize, phi: f64) -> Vec<f64> {
    let innovation = (1.0 - phi * phi).sqrt();
    let mut x = normal(rng);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(x);
        x = phi * x + innovation * normal(rng);
    }
    out
}

fn stream(seed: u64, parts: &[i64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix_seed(seed, parts))
}

fn realized_pv(spec: &GeneratorSpec) -> Vec<PvSeries> {
    let (start, end) = spec.period();
    let n = (end - start) as usize;
    let w = &spec.weather;
    let shared = ar1(&mut stream(spec.seed, &[1]), n, w.persistence);
    let beta = Beta::new(w.beta_a, w.beta_b).expect("validated");
    let std_normal = Normal::standard();
    spec.plants
        .iter()
        .enumerate()
        .map(|(k, plant)| {
            let own = ar1(&mut stream(spec.seed, &[2, k as i64]), n, w.persistence);
            let values = (0..n)
                .map(|i| {
                    let q = start + i as i64;
                    let clear = clear_sky_energy(plant.capacity_mwp, q);
                    if !w.attenuation {
                        return clear;
                    }
                    let z = w.shared.sqrt() * shared[i] + (1.0 - w.shared).sqrt() * own[i];
                    let u = std_normal.cdf(z).clamp(1e-12, 1.0 - 1e-12);
                    clear * beta.inverse_cdf(u)
                })
                .collect();
            PvSeries { start, values }
        })
        .collect()
}

/// Issues at every clock tick cover the next `short_coverage` targets; the
/// noon issue also covers the whole next day for the day-ahead auction.
fn forecasts(spec: &GeneratorSpec, plant: usize, pv: &PvSeries, capacity: f64) -> ForecastStore {
    let f = &spec.forecast;
    let (start, end) = spec.period();
    let upper = capacity * PTU_HOURS;
    let mut store = ForecastStore::new();
    let first_tick = start - (PTUS_PER_DAY - DAY_AHEAD_GATE_OFFSET);
    for issue in first_tick.0..end.0 {
        let issue = Ptu(issue);
        let reach = if issue.is_day_ahead_gate() { 2 * PTUS_PER_DAY - DAY_AHEAD_GATE_OFFSET } else { f.short_coverage as i64 };
        let lo = issue.max(start);
        let hi = (issue + reach).min(end);
        if hi <= lo {
            continue;
        }
        let n = (hi - lo) as usize;
        let mut rng = stream(spec.seed, &[3, plant as i64, issue.0]);
        let centre = ar1(&mut rng, n, f.persistence);
        let members: Vec<Vec<f64>> = (0..f.members).map(|_| ar1(&mut rng, n, f.persistence)).collect();
        for i in 0..n {
            let q = lo + i as i64;
            let lead = (q - issue) as f64;
            let frac = (lead / 72.0).min(1.0);
            let sigma = clear_sky_energy(capacity, q) * (f.sigma_min + (f.sigma_max - f.sigma_min) * frac);
            let truth = pv.get(q).expect("pv covers the period");
            let c = truth - sigma * centre[i];
            let values = members.iter().map(|m| (c + sigma * m[i]).clamp(0.0, upper)).collect();
            store.insert(issue, ForecastDistribution::new(q, values, capacity).expect("values clamped to range"));
        }
    }
    store
}

/// Price series from one day before the period start to its end.
pub fn price_series(spec: &GeneratorSpec) -> PriceSeries {
    let p = &spec.prices;
    let (start, end) = spec.period();
    let first = start - PRICE_LEAD;
    let mut rng = stream(spec.seed, &[4]);
    let gamma = Gamma::new(2.0, p.spread_mean / 2.0).expect("validated");
    let enter = (1.0 - p.inverted_persistence) * p.inverted_probability;
    let stay = p.inverted_persistence + enter;
    let mut inverted = rng.random::<f64>() < p.inverted_probability;
    let mut dev = 0.0;
    let records = (first.0..end.0)
        .map(|q| {
            let hour = Ptu(q).slot_of_day() as f64 * PTU_HOURS;
            let shape = 0.7 * (-((hour - 8.5) / 2.0).powi(2)).exp() + (-((hour - 19.0) / 2.5).powi(2)).exp() - 0.35;
            let spot = p.spot_mean + p.spot_amplitude * shape + dev;
            dev = (1.0 - p.reversion) * dev + p.volatility * normal(&mut rng);
            let up: f64 = gamma.sample(&mut rng);
            let down: f64 = gamma.sample(&mut rng);
            let rec = if inverted {
                PriceRecord { spot, pos_imbalance_price: spot + up, neg_imbalance_price: spot - down }
            } else {
                PriceRecord { spot, pos_imbalance_price: spot - down, neg_imbalance_price: spot + up }
            };
            inverted = rng.random::<f64>() < if inverted { stay } else { enter };
            rec
        })
        .collect();
    PriceSeries::new(first, records).expect("non-empty series")
}

pub fn generate(spec: &GeneratorSpec) -> CliResult<SynthData> {
    spec.validate()?;
    let (start, end) = spec.period();
    let pv = realized_pv(spec);
    let plants = spec
        .plants
        .iter()
        .zip(pv)
        .enumerate()
        .map(|(k, (p, pv))| {
            let store = forecasts(spec, k, &pv, p.capacity_mwp);
            PlantSpec::new(p.name.clone(), p.capacity_mwp, pv, store).map_err(CliError::from)
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(SynthData { start, end, plants, prices: price_series(spec) })
}

/// Writes the data tables and a run configuration referencing them; returns
/// the configuration path.
pub fn write(spec: &GeneratorSpec, data: &SynthData, dir: &Path) -> CliResult<PathBuf> {
    ingest::write_prices(&dir.join("prices.csv"), &data.prices)?;
    let mut plants = Vec::new();
    for p in &data.plants {
        let pv = PathBuf::from(format!("pv_{}.csv", p.name));
        let fc = PathBuf::from(format!("forecasts_{}.csv", p.name));
        ingest::write_pv(&dir.join(&pv), &p.pv)?;
        ingest::write_forecasts(&dir.join(&fc), &p.forecasts, spec.forecast.members)?;
        plants.push(PlantConfig { name: p.name.clone(), capacity_mwp: p.capacity, pv, forecasts: fc });
    }
    let config = RunConfig {
        seed: spec.seed,
        output: PathBuf::from("output"),
        period: PeriodConfig { start: data.start.to_datetime(), end: data.end.to_datetime() },
        plants,
        prices: PricesConfig { path: PathBuf::from("prices.csv") },
        battery: spec.run.battery.clone(),
        mpc: spec.run.mpc.clone(),
        aggregation: spec.run.aggregation.clone(),
    };
    let text = toml::to_string(&config).map_err(|e| CliError::config(e.to_string()))?;
    let path = dir.join("config.toml");
    std::fs::write(&path, text).map_err(|e| crate::error::io_error(&path, e))?;
    Ok(path)
}
