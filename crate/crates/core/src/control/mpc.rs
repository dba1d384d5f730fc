use super::{snap, MpcConfig};
use crate::battery::{BatteryParams, BatteryState};
use crate::error::{Error, Result};
use crate::forecast::ScenarioSet;
use crate::lp::{solve_lp, LpProblem, LpSolution, LpStatus, Relation, Sense, VarId};
use crate::market::{MarketPosition, PriceRecord};

/// Per-MWh cost on charge and discharge throughput that selects the
/// smallest-motion optimum among ties.
pub const MOTION_PENALTY: f64 = 1e-9;

/// Relative weight gap between the first and last step of the horizon in the
/// imbalance objective; earlier corrections win ties.
const EARLINESS: f64 = 1e-6;

/// Optimized command trajectory for one real-time decision.
#[derive(Clone, Debug, PartialEq)]
pub struct RealtimePlan {
    /// Net grid-side commands over the horizon, positive when discharging.
    pub commands: Vec<f64>,
    /// Expected objective without tie-breaking terms: absolute imbalance in
    /// MWh for imbalance minimization, penalized revenue in EUR otherwise.
    pub objective: f64,
}

impl RealtimePlan {
    pub fn first_command(&self) -> f64 {
        snap(self.commands[0])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DayAheadBid {
    pub pv: Vec<f64>,
    pub bess: Vec<f64>,
    /// Expected penalized revenue of the bid, EUR.
    pub objective: f64,
}

struct BessVars {
    dis: Vec<VarId>,
    ch: Vec<VarId>,
}

impl BessVars {
    fn net(&self, sol: &LpSolution) -> Vec<f64> {
        self.dis
            .iter()
            .zip(&self.ch)
            .map(|(&d, &c)| sol.value(d) - sol.value(c))
            .collect()
    }

    fn throughput(&self, sol: &LpSolution) -> f64 {
        self.dis.iter().chain(&self.ch).map(|&v| sol.value(v)).sum()
    }
}

/// Discharge and charge variables with the battery constraint set: power
/// limit on both, PV-only charging against the smallest scenario PV, and, in
/// bounded mode, cumulative content within `[0, capacity]`.
fn add_battery(
    lp: &mut LpProblem,
    state: &BatteryState,
    params: &BatteryParams,
    min_pv: &[f64],
    dis_cost: impl Fn(usize) -> f64,
    ch_cost: impl Fn(usize) -> f64,
) -> BessVars {
    let k = params.power_limit;
    let mut vars = BessVars {
        dis: Vec::with_capacity(min_pv.len()),
        ch: Vec::with_capacity(min_pv.len()),
    };
    for (i, &pv) in min_pv.iter().enumerate() {
        vars.dis.push(lp.add_var(format!("dis_{i}"), dis_cost(i), 0.0, k));
        let ch_hi = k.min(params.charge_efficiency * pv.max(0.0));
        vars.ch.push(lp.add_var(format!("ch_{i}"), ch_cost(i), 0.0, ch_hi));
    }
    if params.is_bounded() {
        let content = state.content(params);
        let mut terms = Vec::with_capacity(2 * min_pv.len());
        for i in 0..min_pv.len() {
            terms.push((vars.dis[i], -1.0 / params.discharge_efficiency));
            terms.push((vars.ch[i], params.charge_efficiency));
            lp.add_constraint(format!("soc_hi_{i}"), terms.clone(), Relation::Le, params.capacity - content);
            lp.add_constraint(format!("soc_lo_{i}"), terms.clone(), Relation::Ge, -content);
        }
    }
    vars
}

fn horizon(scenarios: &ScenarioSet, positions: usize, config: &MpcConfig) -> Result<usize> {
    config.validate()?;
    let h = config.horizon_steps.min(scenarios.horizon()).min(positions);
    if h == 0 {
        return Err(Error::InvalidInput("empty control horizon".into()));
    }
    Ok(h)
}

fn min_pv(scenarios: &ScenarioSet, h: usize) -> Vec<f64> {
    (0..h).map(|i| scenarios.step_minimum(i)).collect()
}

fn require_optimal(sol: &LpSolution, what: &str) -> Result<()> {
    match sol.status {
        LpStatus::Optimal => Ok(()),
        LpStatus::Infeasible => Err(Error::Solver(format!("{what}: infeasible"))),
        LpStatus::Unbounded => Err(Error::Solver(format!("{what}: unbounded"))),
    }
}

struct ImbalanceLp {
    lp: LpProblem,
    bess: BessVars,
    slacks: Vec<(VarId, VarId, f64)>,
}

fn imbalance_lp(
    state: &BatteryState,
    params: &BatteryParams,
    scenarios: &ScenarioSet,
    positions: &[MarketPosition],
    config: &MpcConfig,
) -> Result<ImbalanceLp> {
    let h = horizon(scenarios, positions.len(), config)?;
    let mut lp = LpProblem::new(Sense::Minimize);
    let bess = add_battery(
        &mut lp,
        state,
        params,
        &min_pv(scenarios, h),
        |_| MOTION_PENALTY,
        |_| MOTION_PENALTY,
    );
    let mut slacks = Vec::with_capacity(h * scenarios.n_scenarios());
    for (s, (row, &w)) in scenarios.scenarios().iter().zip(scenarios.weights()).enumerate() {
        for i in 0..h {
            let lambda = 1.0 + EARLINESS * (h - i) as f64 / h as f64;
            let u = lp.add_var(format!("surplus_{s}_{i}"), w * lambda, 0.0, f64::INFINITY);
            let v = lp.add_var(format!("deficit_{s}_{i}"), w * lambda, 0.0, f64::INFINITY);
            let target = positions[i].day_ahead_energy - positions[i].intraday_energy;
            lp.add_constraint(
                format!("imbalance_{s}_{i}"),
                vec![(bess.dis[i], 1.0), (bess.ch[i], -1.0), (u, -1.0), (v, 1.0)],
                Relation::Eq,
                target - row[i],
            );
            slacks.push((u, v, w));
        }
    }
    Ok(ImbalanceLp { lp, bess, slacks })
}

/// Expected-absolute-imbalance LP over the horizon, for inspection.
pub fn build_realtime_imbalance_lp(
    state: &BatteryState,
    params: &BatteryParams,
    scenarios: &ScenarioSet,
    positions: &[MarketPosition],
    config: &MpcConfig,
) -> Result<LpProblem> {
    Ok(imbalance_lp(state, params, scenarios, positions, config)?.lp)
}

/// Minimizes expected absolute imbalance over the horizon with
/// scenario-shared battery commands.
pub fn plan_realtime_imbalance(
    state: &BatteryState,
    params: &BatteryParams,
    scenarios: &ScenarioSet,
    positions: &[MarketPosition],
    config: &MpcConfig,
) -> Result<RealtimePlan> {
    let built = imbalance_lp(state, params, scenarios, positions, config)?;
    let sol = solve_lp(&built.lp)?;
    // Idling is always feasible, so infeasibility means corrupted inputs.
    require_optimal(&sol, "real-time imbalance program")?;
    let objective = built
        .slacks
        .iter()
        .map(|&(u, v, w)| w * (sol.value(u) + sol.value(v)))
        .sum();
    Ok(RealtimePlan {
        commands: built.bess.net(&sol),
        objective,
    })
}

pub fn realtime_control_imbalance(
    state: &BatteryState,
    params: &BatteryParams,
    scenarios: &ScenarioSet,
    positions: &[MarketPosition],
    config: &MpcConfig,
) -> Result<f64> {
    Ok(plan_realtime_imbalance(state, params, scenarios, positions, config)?.first_command())
}

/// Value assigned to each MWh left in storage at the end of a horizon:
/// what it would fetch at the mean forecast spot price after discharge losses.
fn terminal_value(params: &BatteryParams, prices: &[PriceRecord]) -> f64 {
    let mean = prices.iter().map(|p| p.spot).sum::<f64>() / prices.len() as f64;
    params.discharge_efficiency * mean
}

/// Surplus and deficit prices used inside the programs. For inverted prices
/// they are swapped, which bounds the revenue from below and keeps it concave.
fn kink_prices(p: &PriceRecord) -> (f64, f64) {
    let lo = p.pos_imbalance_price.min(p.neg_imbalance_price);
    let hi = p.pos_imbalance_price.max(p.neg_imbalance_price);
    (lo, hi)
}

struct RevenueLp {
    lp: LpProblem,
    bess: BessVars,
    /// Objective terms that do not depend on any variable.
    constant: f64,
}

fn revenue_lp(
    state: &BatteryState,
    params: &BatteryParams,
    scenarios: &ScenarioSet,
    positions: &[MarketPosition],
    prices: &[PriceRecord],
    config: &MpcConfig,
) -> Result<RevenueLp> {
    let h = horizon(scenarios, positions.len().min(prices.len()), config)?;
    let prices = &prices[..h];
    let proxy = params.throughput_cost_per_mwh();
    let vt = terminal_value(params, prices);
    let mut lp = LpProblem::new(Sense::Maximize);
    let bess = add_battery(
        &mut lp,
        state,
        params,
        &min_pv(scenarios, h),
        |i| prices[i].spot - proxy - MOTION_PENALTY - vt / params.discharge_efficiency,
        |i| -prices[i].spot - proxy - MOTION_PENALTY + vt * params.charge_efficiency,
    );
    let mut constant = 0.0;
    for (s, (row, &w)) in scenarios.scenarios().iter().zip(scenarios.weights()).enumerate() {
        for i in 0..h {
            let p = &prices[i];
            let (lo, hi) = kink_prices(p);
            constant += w * p.spot * row[i];
            let u = lp.add_var(format!("surplus_{s}_{i}"), -w * (p.spot - lo), 0.0, f64::INFINITY);
            let v = lp.add_var(format!("deficit_{s}_{i}"), w * (p.spot - hi), 0.0, f64::INFINITY);
            let target = positions[i].day_ahead_energy - positions[i].intraday_energy;
            lp.add_constraint(
                format!("imbalance_{s}_{i}"),
                vec![(bess.dis[i], 1.0), (bess.ch[i], -1.0), (u, -1.0), (v, 1.0)],
                Relation::Eq,
                target - row[i],
            );
        }
    }
    Ok(RevenueLp { lp, bess, constant })
}

/// Expected-penalized-revenue LP over the horizon, for inspection.
pub fn build_realtime_revenue_lp(
    state: &BatteryState,
    params: &BatteryParams,
    scenarios: &ScenarioSet,
    positions: &[MarketPosition],
    prices: &[PriceRecord],
    config: &MpcConfig,
) -> Result<LpProblem> {
    Ok(revenue_lp(state, params, scenarios, positions, prices, config)?.lp)
}

/// Maximizes expected penalized revenue over the horizon with positions
/// fixed: dual-price imbalance settlement, the linear aging proxy and a
/// terminal value on the stored energy.
pub fn plan_realtime_revenue(
    state: &BatteryState,
    params: &BatteryParams,
    scenarios: &ScenarioSet,
    positions: &[MarketPosition],
    prices: &[PriceRecord],
    config: &MpcConfig,
) -> Result<RealtimePlan> {
    let built = revenue_lp(state, params, scenarios, positions, prices, config)?;
    let sol = solve_lp(&built.lp)?;
    require_optimal(&sol, "real-time revenue program")?;
    Ok(RealtimePlan {
        commands: built.bess.net(&sol),
        objective: sol.objective + MOTION_PENALTY * built.bess.throughput(&sol) + built.constant,
    })
}

pub fn realtime_control_revenue(
    state: &BatteryState,
    params: &BatteryParams,
    scenarios: &ScenarioSet,
    positions: &[MarketPosition],
    prices: &[PriceRecord],
    config: &MpcConfig,
) -> Result<f64> {
    Ok(plan_realtime_revenue(state, params, scenarios, positions, prices, config)?.first_command())
}

struct DayAheadLp {
    lp: LpProblem,
    pv: Vec<VarId>,
    bess: Option<BessVars>,
    constant: f64,
}

fn day_ahead_lp(
    scenarios: &ScenarioSet,
    prices: &[PriceRecord],
    battery: Option<(&BatteryState, &BatteryParams)>,
    pv_bid_cap: Option<f64>,
) -> Result<DayAheadLp> {
    let h = scenarios.horizon();
    if prices.len() < h {
        return Err(Error::DimensionMismatch {
            expected: h,
            actual: prices.len(),
        });
    }
    let prices = &prices[..h];
    let mut lp = LpProblem::new(Sense::Maximize);
    let cap = pv_bid_cap.unwrap_or(f64::INFINITY);
    let pv: Vec<VarId> = (0..h).map(|i| lp.add_var(format!("bid_pv_{i}"), 0.0, 0.0, cap)).collect();
    let bess = battery.map(|(state, params)| {
        let proxy = params.throughput_cost_per_mwh();
        let vt = terminal_value(params, prices);
        add_battery(
            &mut lp,
            state,
            params,
            &min_pv(scenarios, h),
            |i| prices[i].spot - proxy - MOTION_PENALTY - vt / params.discharge_efficiency,
            |i| -prices[i].spot - proxy - MOTION_PENALTY + vt * params.charge_efficiency,
        )
    });
    let mut constant = 0.0;
    for (s, (row, &w)) in scenarios.scenarios().iter().zip(scenarios.weights()).enumerate() {
        for i in 0..h {
            let p = &prices[i];
            let (lo, hi) = kink_prices(p);
            constant += w * p.spot * row[i];
            let u = lp.add_var(format!("surplus_{s}_{i}"), -w * (p.spot - lo), 0.0, f64::INFINITY);
            let v = lp.add_var(format!("deficit_{s}_{i}"), w * (p.spot - hi), 0.0, f64::INFINITY);
            // The battery part is assumed delivered as bid, so only PV deviates.
            lp.add_constraint(
                format!("imbalance_{s}_{i}"),
                vec![(u, 1.0), (v, -1.0), (pv[i], 1.0)],
                Relation::Eq,
                row[i],
            );
        }
    }
    Ok(DayAheadLp {
        lp,
        pv,
        bess,
        constant,
    })
}

/// Day-ahead penalized-revenue LP, for inspection.
pub fn build_day_ahead_revenue_lp(
    scenarios: &ScenarioSet,
    prices: &[PriceRecord],
    battery: Option<(&BatteryState, &BatteryParams)>,
    pv_bid_cap: Option<f64>,
) -> Result<LpProblem> {
    Ok(day_ahead_lp(scenarios, prices, battery, pv_bid_cap)?.lp)
}

/// Jointly optimizes the PV and battery parts of the day-ahead bids against
/// forecast prices, one pair per scenario step.
pub fn day_ahead_bid_revenue(
    scenarios: &ScenarioSet,
    prices: &[PriceRecord],
    battery: Option<(&BatteryState, &BatteryParams)>,
    pv_bid_cap: Option<f64>,
) -> Result<DayAheadBid> {
    let built = day_ahead_lp(scenarios, prices, battery, pv_bid_cap)?;
    let sol = solve_lp(&built.lp)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Unbounded => {
            return Err(Error::Unbounded);
        }
        LpStatus::Infeasible => return Err(Error::Infeasible),
    }
    let pv = built.pv.iter().map(|&v| snap(sol.value(v))).collect();
    let (bess, motion) = match &built.bess {
        Some(b) => (b.net(&sol).into_iter().map(snap).collect(), b.throughput(&sol)),
        None => (vec![0.0; scenarios.horizon()], 0.0),
    };
    Ok(DayAheadBid {
        pv,
        bess,
        objective: sol.objective + MOTION_PENALTY * motion + built.constant,
    })
}
