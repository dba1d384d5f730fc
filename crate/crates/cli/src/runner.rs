//! Turns a run configuration into simulator inputs.

use std::path::PathBuf;

use pvbess_core::battery::CapacityMode;
use pvbess_core::forecast::CopulaSpec;
use pvbess_core::market::PriceSeries;
use pvbess_core::simulator::{aggregate, AggregationSpec, PlantSpec, SimulationInput};
use pvbess_core::PTUS_PER_DAY;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::ingest;

/// Loaded data shared by every run of one configuration.
#[derive(Clone, Debug)]
pub struct StudyData {
    pub plant: PlantSpec,
    pub prices: PriceSeries,
}

pub fn load_data(cfg: &RunConfig) -> CliResult<StudyData> {
    let prices = ingest::read_prices(&cfg.prices.path)?;
    let plants = cfg
        .plants
        .iter()
        .map(|p| {
            let pv = ingest::read_pv(&p.pv, p.capacity_mwp)?;
            let forecasts = ingest::read_forecasts(&p.forecasts, p.capacity_mwp)?;
            PlantSpec::new(p.name.clone(), p.capacity_mwp, pv, forecasts)
                .map_err(|e| CliError::data(format!("plant {}: {e}", p.name)))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let plant = combine(plants, cfg)?;
    Ok(StudyData { plant, prices })
}

/// Single plants pass through; several are aggregated with the configured
/// cross-plant error correlation.
pub fn combine(plants: Vec<PlantSpec>, cfg: &RunConfig) -> CliResult<PlantSpec> {
    if plants.len() == 1 {
        return Ok(plants.into_iter().next().expect("one plant"));
    }
    let n = plants.len();
    let cross_plant = CopulaSpec::equicorrelated(n, cfg.aggregation.cross_plant_correlation)
        .map_err(|e| CliError::config(format!("aggregation: {e}")))?;
    let spec = AggregationSpec {
        plants,
        cross_plant,
        members: cfg.aggregation.members,
        seed: cfg.seed,
    };
    aggregate(&spec).map_err(|e| CliError::data(format!("aggregation: {e}")))
}

pub fn scenario_copula(cfg: &RunConfig) -> CopulaSpec {
    let dim = cfg.mpc.horizon.max(PTUS_PER_DAY as usize);
    CopulaSpec::exponential(dim, cfg.mpc.correlation_length)
}

pub fn simulation_input(cfg: &RunConfig, data: &StudyData, debug_lp: Option<PathBuf>) -> CliResult<SimulationInput> {
    let (period_start, period_end) = cfg.period_ptus()?;
    let battery = cfg.battery.as_ref().map(|b| b.params()).transpose()?;
    Ok(SimulationInput {
        plant: data.plant.clone(),
        prices: data.prices.clone(),
        battery,
        initial_soc: cfg.battery.as_ref().map_or(0.5, |b| b.initial_soc),
        config: cfg.mpc.mpc_config(),
        scenario_copula: scenario_copula(cfg),
        period_start,
        period_end,
        seed: cfg.seed,
        record_access: false,
        debug_lp_dir: debug_lp,
    })
}

/// Same input with the capacity constraints switched off.
pub fn unbounded(mut input: SimulationInput) -> CliResult<SimulationInput> {
    let b = input
        .battery
        .take()
        .ok_or_else(|| CliError::config("sizing needs a [battery] section for efficiencies and power limit"))?;
    input.battery = Some(b.with_mode(CapacityMode::Unbounded));
    Ok(input)
}
