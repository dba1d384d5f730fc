//! Small hand-built study periods for simulator tests.
#![allow(dead_code)]

use pvbess_core::battery::BatteryParams;
use pvbess_core::control::{MpcConfig, Mode, Objective};
use pvbess_core::forecast::{CopulaSpec, ForecastDistribution, ForecastStore};
use pvbess_core::market::{PriceRecord, PriceSeries};
use pvbess_core::simulator::{PlantSpec, PvSeries, SimulationInput};
use pvbess_core::{Ptu, PTUS_PER_DAY};

/// 2024-01-01 as a day index.
pub const DAY0: i64 = 19723;

pub fn period(days: i64) -> (Ptu, Ptu) {
    let start = Ptu::start_of_day(DAY0);
    (start, start + days * PTUS_PER_DAY)
}

/// Bell-shaped daily production between 06:00 and 18:00, scaled per day.
pub fn pv_profile(capacity: f64, start: Ptu, end: Ptu) -> PvSeries {
    let values = (start.0..end.0)
        .map(|q| {
            let q = Ptu(q);
            let s = q.slot_of_day() as f64;
            let shape = ((s - 12.0) * std::f64::consts::PI / 24.0).sin().max(0.0);
            let weather = 0.7 + 0.3 * ((q.day() * 7 % 5) as f64 / 4.0);
            0.5 * capacity * shape * shape * weather
        })
        .collect();
    PvSeries { start, values }
}

/// Forecast value for `target` issued at `issue`: biased, with the bias
/// shrinking as delivery approaches. `members` evenly spread multipliers.
pub fn forecast_members(truth: f64, issue: Ptu, target: Ptu, members: usize, max: f64, perfect: bool) -> Vec<f64> {
    if perfect {
        return vec![truth; members.max(1)];
    }
    let lead = (target.0 - issue.0).max(0) as f64;
    let bias = 0.25 * ((target.0 % 7) as f64 - 3.0) / 3.0 * (lead / 72.0).min(1.0) + 0.02 * ((target.0 % 3) as f64 - 1.0);
    (0..members)
        .map(|k| {
            let spread = if members > 1 { 0.3 * (k as f64 / (members - 1) as f64 - 0.5) } else { 0.0 };
            (truth * (1.0 + bias + spread)).clamp(0.0, max)
        })
        .collect()
}

/// Forecasts issued every PTU from the first clock tick, each covering the
/// next 73 PTUs within the period.
pub fn forecast_store(pv: &PvSeries, start: Ptu, end: Ptu, capacity: f64, members: usize, perfect: bool) -> ForecastStore {
    let mut store = ForecastStore::new();
    let max = capacity * 0.5;
    for issue in (start.0 - 24)..end.0 {
        let issue = Ptu(issue);
        for target in issue.0.max(start.0)..(issue.0 + 73).min(end.0) {
            let target = Ptu(target);
            let truth = pv.get(target).unwrap();
            let values = forecast_members(truth, issue, target, members, max, perfect);
            store.insert(issue, ForecastDistribution::new(target, values, capacity).unwrap());
        }
    }
    store
}

/// Spot with a daily shape and moderate balancing spreads; every fifth PTU
/// has remunerative deficit prices when `inverted` is set.
pub fn prices(start: Ptu, end: Ptu, inverted: bool) -> PriceSeries {
    let first = start - PTUS_PER_DAY;
    let records = (first.0..end.0)
        .map(|q| {
            let s = (q.rem_euclid(PTUS_PER_DAY)) as f64;
            let spot = 45.0 + 15.0 * ((s - 14.0) * std::f64::consts::PI / 24.0).sin() + (q % 11) as f64;
            let up = 4.0 + (q % 5) as f64;
            let down = 6.0 + (q % 7) as f64;
            if inverted && q % 5 == 0 {
                PriceRecord::new(spot, spot + up, spot - down).unwrap()
            } else {
                PriceRecord::new(spot, spot - down, spot + up).unwrap()
            }
        })
        .collect();
    PriceSeries::new(first, records).unwrap()
}

pub fn battery() -> BatteryParams {
    BatteryParams::new(1.2, 0.95, 0.93, 0.6, 150_000.0).unwrap()
}

pub struct Fixture {
    pub days: i64,
    pub capacity: f64,
    pub members: usize,
    pub perfect: bool,
    pub inverted: bool,
    pub battery: Option<BatteryParams>,
    pub config: MpcConfig,
}

impl Default for Fixture {
    fn default() -> Self {
        Self {
            days: 2,
            capacity: 2.7,
            members: 9,
            perfect: false,
            inverted: false,
            battery: Some(battery()),
            config: MpcConfig {
                horizon_steps: 6,
                n_scenarios: 4,
                objective: Objective::ImbalanceMin,
                mode: Mode::Stochastic,
                use_intraday: true,
            },
        }
    }
}

impl Fixture {
    pub fn input(&self) -> SimulationInput {
        let (start, end) = period(self.days);
        let pv = pv_profile(self.capacity, start, end);
        let forecasts = forecast_store(&pv, start, end, self.capacity, self.members, self.perfect);
        SimulationInput {
            plant: PlantSpec::new("fixture", self.capacity, pv, forecasts).unwrap(),
            prices: prices(start, end, self.inverted),
            battery: self.battery.clone(),
            initial_soc: 0.5,
            config: self.config.clone(),
            scenario_copula: CopulaSpec::exponential(PTUS_PER_DAY as usize, 6.0),
            period_start: start,
            period_end: end,
            seed: 7,
            record_access: true,
            debug_lp_dir: None,
        }
    }
}
