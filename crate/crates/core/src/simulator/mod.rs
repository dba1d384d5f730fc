//! Rolling-horizon replay of a study period on the 30-minute clock.
//!
//! The clock starts at the day-ahead gate before the first delivery day. At
//! each tick `t` the stages run in order: the day-ahead auction (noon only)
//! for the next day, the intra-day trade for PTU `t + 1`, the real-time
//! battery decision for PTU `t`, then delivery and settlement of PTU `t`.

mod aggregate;
mod data;
mod result;

pub use aggregate::{aggregate, AggregationSpec, PlantSpec, PvSeries};
pub use data::{Access, DataKind, Stage};
pub use result::{settle, PtuRecord, RunMetadata, SimulationResult, SummaryTotals};

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::battery::{feasible_command_range, step, AgingMeter, BatteryParams, BatteryState, CapacityMode};
use crate::control::{
    build_day_ahead_revenue_lp, build_realtime_imbalance_lp, build_realtime_revenue_lp, build_scenarios,
    day_ahead_bid_imbalance, day_ahead_bid_revenue, intraday_bid_imbalance, intraday_bid_revenue,
    plan_realtime_imbalance, plan_realtime_revenue, MpcConfig, Mode, Objective,
};
use crate::error::{Error, Result};
use crate::forecast::{CopulaSpec, ForecastDistribution};
use crate::lp::LpProblem;
use crate::market::{settle_ptu, MarketPosition, PriceRecord, PriceSeries};
use crate::time::{Ptu, DAY_AHEAD_GATE_OFFSET, PTUS_PER_DAY};

use data::MarketData;

/// PTUs of price history required before the period start.
pub const PRICE_LEAD: i64 = PTUS_PER_DAY;

#[derive(Clone, Debug)]
pub struct SimulationInput {
    /// Single or aggregated plant.
    pub plant: PlantSpec,
    pub prices: PriceSeries,
    /// `None` runs without storage: no real-time decisions are taken.
    pub battery: Option<BatteryParams>,
    pub initial_soc: f64,
    pub config: MpcConfig,
    /// Temporal dependence of forecast errors across horizon steps.
    pub scenario_copula: CopulaSpec,
    /// First delivered PTU; must be a midnight.
    pub period_start: Ptu,
    /// One past the last delivered PTU; must be a midnight.
    pub period_end: Ptu,
    pub seed: u64,
    pub record_access: bool,
    /// Directory receiving a text dump of every linear program solved.
    pub debug_lp_dir: Option<PathBuf>,
}

impl SimulationInput {
    pub fn strategy_label(&self) -> String {
        strategy_label(&self.config, self.battery.is_some())
    }
}

pub fn strategy_label(config: &MpcConfig, with_battery: bool) -> String {
    let objective = match config.objective {
        Objective::ImbalanceMin => "imbalance-min",
        Objective::RevenueMax => "revenue-max",
    };
    let mode = match config.mode {
        Mode::Stochastic => "stochastic",
        Mode::Deterministic => "deterministic",
    };
    let id = if config.use_intraday { "id" } else { "no-id" };
    let bess = if with_battery { "bess" } else { "no-bess" };
    format!("{objective}/{mode}/{id}/{bess}")
}

/// SplitMix64 over the seed and a list of stream identifiers.
pub fn mix_seed(seed: u64, parts: &[i64]) -> u64 {
    let mut z = seed;
    for &p in parts {
        z ^= p as u64;
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
    }
    z
}

fn validate(input: &SimulationInput) -> Result<()> {
    let (start, end) = (input.period_start, input.period_end);
    if start.slot_of_day() != 0 || end.slot_of_day() != 0 {
        return Err(Error::InvalidInput(format!(
            "study period [{start}, {end}) must start and end at midnight UTC"
        )));
    }
    if end <= start {
        return Err(Error::InvalidInput(format!("empty study period [{start}, {end})")));
    }
    input.config.validate()?;
    if let Some(b) = &input.battery {
        b.validate()?;
        if b.is_bounded() {
            BatteryState::new(input.initial_soc)?;
        }
    }
    let missing_pv: Vec<Ptu> = (start.0..end.0)
        .map(Ptu)
        .filter(|q| input.plant.pv.get(*q).is_none())
        .collect();
    if !missing_pv.is_empty() {
        return Err(Error::DataGap {
            what: format!("realized PV of {}", input.plant.name),
            missing: missing_pv,
        });
    }
    let missing_prices: Vec<Ptu> = (start.0 - PRICE_LEAD..end.0)
        .map(Ptu)
        .filter(|q| input.prices.get(*q).is_none())
        .collect();
    if !missing_prices.is_empty() {
        return Err(Error::DataGap {
            what: "price records (period plus one day of history)".into(),
            missing: missing_prices,
        });
    }
    let needed = input.config.horizon_steps.max(PTUS_PER_DAY as usize);
    if input.config.effective_scenarios() > 1 && input.scenario_copula.dim() < needed {
        return Err(Error::DimensionMismatch {
            expected: needed,
            actual: input.scenario_copula.dim(),
        });
    }
    Ok(())
}

struct Booked {
    position: MarketPosition,
    day_ahead_at: Ptu,
    intraday_at: Option<Ptu>,
}

struct Engine<'a> {
    input: &'a SimulationInput,
    data: MarketData<'a>,
    book: BTreeMap<Ptu, Booked>,
}

impl Engine<'_> {
    fn dump(&self, name: String, lp: impl FnOnce() -> Result<LpProblem>) -> Result<()> {
        if let Some(dir) = &self.input.debug_lp_dir {
            let path = dir.join(name);
            std::fs::create_dir_all(dir).map_err(|source| Error::Io {
                path: dir.display().to_string(),
                source,
            })?;
            std::fs::write(&path, lp()?.to_text()).map_err(|source| Error::Io {
                path: path.display().to_string(),
                source,
            })?;
        }
        Ok(())
    }

    fn forecasts(&self, t: Ptu, targets: &[Ptu]) -> Result<Vec<ForecastDistribution>> {
        self.input.plant.forecasts.latest_many(t, targets.iter().copied())
    }

    fn price_forecasts(&self, t: Ptu, stage: Stage, targets: &[Ptu]) -> Result<Vec<PriceRecord>> {
        targets.iter().map(|&q| self.data.price_forecast(t, stage, q)).collect()
    }

    fn day_ahead(&mut self, t: Ptu, state: &BatteryState) -> Result<()> {
        let input = self.input;
        let first = t + (PTUS_PER_DAY - DAY_AHEAD_GATE_OFFSET);
        let targets: Vec<Ptu> = (first.0..first.0 + PTUS_PER_DAY).map(Ptu).collect();
        let dists = self.forecasts(t, &targets)?;
        let (pv, bess) = match input.config.objective {
            Objective::ImbalanceMin => (day_ahead_bid_imbalance(&dists)?, vec![0.0; targets.len()]),
            Objective::RevenueMax => {
                let scenarios = build_scenarios(
                    &dists,
                    &input.scenario_copula,
                    &input.config,
                    mix_seed(input.seed, &[t.0, 0]),
                )?;
                let prices = self.price_forecasts(t, Stage::DayAhead, &targets)?;
                let battery = input.battery.as_ref().map(|p| (state, p));
                let cap = Some(input.plant.max_energy());
                self.dump(format!("day_ahead_{}.lp", t.0), || {
                    build_day_ahead_revenue_lp(&scenarios, &prices, battery, cap)
                })?;
                let bid = day_ahead_bid_revenue(&scenarios, &prices, battery, cap)?;
                (bid.pv, bid.bess)
            }
        };
        for ((q, pv), bess) in targets.into_iter().zip(pv).zip(bess) {
            self.book.insert(
                q,
                Booked {
                    position: MarketPosition::day_ahead(q, pv, bess),
                    day_ahead_at: t,
                    intraday_at: None,
                },
            );
        }
        Ok(())
    }

    /// Intra-day volume the configured rule would trade for `position`.
    fn intraday_volume(&self, t: Ptu, stage: Stage, position: &MarketPosition, dist: &ForecastDistribution) -> Result<f64> {
        let e = match self.input.config.objective {
            Objective::ImbalanceMin => intraday_bid_imbalance(position, dist, t)?,
            Objective::RevenueMax => {
                let prices = self.data.price_forecast(t, stage, position.ptu)?;
                intraday_bid_revenue(position, dist, &prices, t)?
            }
        };
        Ok(crate::control::snap(e))
    }

    fn intraday(&mut self, t: Ptu) -> Result<()> {
        let q = t + 1;
        let position = self.booked(q)?.position;
        let dist = self.input.plant.forecasts.latest(t, q)?;
        let volume = self.intraday_volume(t, Stage::Intraday, &position, dist)?;
        let price = self.data.spot(t, Stage::Intraday, q)?;
        let booked = self.book.get_mut(&q).expect("booked above");
        booked.position = position.with_intraday(volume, price);
        booked.intraday_at = Some(t);
        Ok(())
    }

    fn booked(&self, q: Ptu) -> Result<&Booked> {
        self.book
            .get(&q)
            .ok_or_else(|| Error::InvalidInput(format!("no day-ahead position for {q}")))
    }

    /// Real-time command for PTU `t`, with the median forecast and the number
    /// of scenarios used.
    fn realtime(&self, t: Ptu, state: &BatteryState, params: &BatteryParams) -> Result<(f64, f64, usize)> {
        let input = self.input;
        let mut config = input.config.clone();
        // Without capacity rows the imbalance program separates by step, so
        // the first step alone determines the command.
        if params.mode == CapacityMode::Unbounded && config.objective == Objective::ImbalanceMin {
            config.horizon_steps = 1;
        }
        // The horizon ends at the period end, at the last booked position or
        // at the last PTU the freshest forecasts cover, whichever comes first.
        let store = &input.plant.forecasts;
        let mut targets = vec![t];
        let mut dists = vec![store.latest(t, t)?.clone()];
        for q in (t.0 + 1..t.0 + config.horizon_steps as i64).map(Ptu) {
            match store.latest(t, q) {
                Ok(d) if q < input.period_end && self.book.contains_key(&q) => {
                    targets.push(q);
                    dists.push(d.clone());
                }
                _ => break,
            }
        }
        let mut positions = Vec::with_capacity(targets.len());
        for (i, q) in targets.iter().enumerate() {
            let mut p = self.booked(*q)?.position;
            if i > 0 && config.use_intraday {
                let volume = self.intraday_volume(t, Stage::RealTime, &p, &dists[i])?;
                p = p.with_intraday(volume, p.intraday_price);
            }
            positions.push(p);
        }
        let scenarios = build_scenarios(&dists, &input.scenario_copula, &config, mix_seed(input.seed, &[t.0, 1]))?;
        let plan = match config.objective {
            Objective::ImbalanceMin => {
                self.dump(format!("realtime_{}.lp", t.0), || {
                    build_realtime_imbalance_lp(state, params, &scenarios, &positions, &config)
                })?;
                plan_realtime_imbalance(state, params, &scenarios, &positions, &config)?
            }
            Objective::RevenueMax => {
                let prices = self.price_forecasts(t, Stage::RealTime, &targets)?;
                self.dump(format!("realtime_{}.lp", t.0), || {
                    build_realtime_revenue_lp(state, params, &scenarios, &positions, &prices, &config)
                })?;
                plan_realtime_revenue(state, params, &scenarios, &positions, &prices, &config)?
            }
        };
        Ok((plan.first_command(), dists[0].median(), scenarios.n_scenarios()))
    }
}

/// Replays the study period. Deterministic in the inputs and the seed.
pub fn run(input: &SimulationInput) -> Result<SimulationResult> {
    validate(input)?;
    let mut engine = Engine {
        input,
        data: MarketData::new(&input.prices, &input.plant.pv, input.record_access),
        book: BTreeMap::new(),
    };
    let mut state = match &input.battery {
        Some(b) if !b.is_bounded() => BatteryState::unbounded(input.initial_soc),
        Some(_) => BatteryState::new(input.initial_soc)?,
        None => BatteryState::unbounded(0.0),
    };
    let mut meter = input.battery.as_ref().map(|b| AgingMeter::new(b, state.soc));
    let content = |s: &BatteryState| input.battery.as_ref().map_or(0.0, |b| s.content(b));
    let metadata = RunMetadata {
        period_start: input.period_start,
        period_end: input.period_end,
        seed: input.seed,
        strategy: input.strategy_label(),
        plant: input.plant.name.clone(),
        plant_capacity: input.plant.capacity,
        initial_content: content(&state),
    };
    let first_tick = input.period_start - (PTUS_PER_DAY - DAY_AHEAD_GATE_OFFSET);
    let mut records = Vec::with_capacity((input.period_end - input.period_start) as usize);

    for tick in first_tick.0..input.period_end.0 {
        let t = Ptu(tick);
        let next_day = t + (PTUS_PER_DAY - DAY_AHEAD_GATE_OFFSET);
        if t.is_day_ahead_gate() && next_day >= input.period_start && next_day < input.period_end {
            engine.day_ahead(t, &state).map_err(|e| e.at(next_day))?;
        }
        let q = t + 1;
        if input.config.use_intraday && q >= input.period_start && q < input.period_end {
            engine.intraday(t).map_err(|e| e.at(q))?;
        }
        if t < input.period_start {
            continue;
        }

        let (planned, median, used) = match &input.battery {
            Some(params) => engine.realtime(t, &state, params).map_err(|e| e.at(t))?,
            None => (0.0, input.plant.forecasts.latest(t, t).map_or(f64::NAN, |d| d.median()), 0),
        };

        let pv = engine.data.realized_pv(t, Stage::Delivery, t)?;
        let prices = engine.data.balancing(t, Stage::Delivery, t)?;
        let soc_before = state.soc;
        let (executed, aging) = match (&input.battery, meter.as_mut()) {
            (Some(params), Some(meter)) => {
                let range = feasible_command_range(&state, params, pv);
                let executed = crate::control::snap(range.clamp(planned));
                state = step(&state, params, executed, pv).map_err(|e| e.at(t))?;
                (executed, meter.record(state.soc))
            }
            _ => (0.0, 0.0),
        };
        let booked = engine.booked(t)?;
        let position = booked.position;
        records.push(PtuRecord {
            position,
            settlement: settle_ptu(pv, executed, &position, &prices, aging),
            prices,
            pv_energy: pv,
            planned_command: planned,
            executed_command: executed,
            soc_before,
            soc_after: state.soc,
            content_after: content(&state),
            forecast_median: median,
            scenarios_used: used,
            day_ahead_at: booked.day_ahead_at,
            intraday_at: booked.intraday_at,
            realtime_at: input.battery.as_ref().map(|_| t),
        });
        engine.book.remove(&t);
    }
    Ok(SimulationResult {
        metadata,
        records,
        access_log: engine.data.into_log(),
    })
}
