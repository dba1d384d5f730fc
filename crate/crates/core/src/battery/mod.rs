//! Battery dynamics, rainflow cycle counting and cycling-aging cost.
//!
//! Commands are grid-side energies per PTU, positive when discharging. Charge
//! losses sit between the PV plant and the cells (stored = `eta_ch` x drawn),
//! discharge losses between the cells and the grid (delivered = `eta_dis` x
//! withdrawn). The battery charges from the PV plant only.

mod rainflow;

pub use rainflow::{rainflow_cycles, turning_points, AgingMeter, Cycle, RainflowCounter};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rounding slack accepted on feasibility checks and SOC updates.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-9;

/// Whether the state of charge is confined to `[0, 1]`.
///
/// `Unbounded` drops the capacity constraints (content may go negative or
/// above capacity) while keeping efficiencies, the power limit and PV-only
/// charging; sizing runs use it to measure how much storage a strategy asks for.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CapacityMode {
    #[default]
    Bounded,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatteryParams {
    /// Usable capacity in MWh. In unbounded mode it only scales the SOC.
    pub capacity: f64,
    pub charge_efficiency: f64,
    pub discharge_efficiency: f64,
    /// Maximum grid-side energy per PTU in either direction, MWh.
    pub power_limit: f64,
    /// Cost of a full replacement, EUR.
    pub replacement_cost: f64,
    /// Cycles to failure at 100 % depth of discharge.
    pub cycles_at_full_depth: f64,
    pub woehler_exponent: f64,
    #[serde(default)]
    pub mode: CapacityMode,
}

impl BatteryParams {
    pub const DEFAULT_CYCLES_AT_FULL_DEPTH: f64 = 5000.0;
    pub const DEFAULT_WOEHLER_EXPONENT: f64 = 1.1;

    /// Parameters with the default Woehler curve.
    pub fn new(
        capacity: f64,
        charge_efficiency: f64,
        discharge_efficiency: f64,
        power_limit: f64,
        replacement_cost: f64,
    ) -> Result<Self> {
        let p = Self {
            capacity,
            charge_efficiency,
            discharge_efficiency,
            power_limit,
            replacement_cost,
            cycles_at_full_depth: Self::DEFAULT_CYCLES_AT_FULL_DEPTH,
            woehler_exponent: Self::DEFAULT_WOEHLER_EXPONENT,
            mode: CapacityMode::Bounded,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_mode(mut self, mode: CapacityMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| Err(Error::InvalidInput(format!("battery {what} invalid: {v}")));
        if !(self.capacity.is_finite() && self.capacity > 0.0) {
            return bad("capacity", self.capacity);
        }
        for (name, eta) in [
            ("charge efficiency", self.charge_efficiency),
            ("discharge efficiency", self.discharge_efficiency),
        ] {
            if !(eta > 0.0 && eta <= 1.0) {
                return bad(name, eta);
            }
        }
        if !(self.power_limit > 0.0) || self.power_limit.is_nan() {
            return bad("power limit", self.power_limit);
        }
        if !(self.replacement_cost >= 0.0 && self.replacement_cost.is_finite()) {
            return bad("replacement cost", self.replacement_cost);
        }
        if !(self.cycles_at_full_depth > 0.0 && self.cycles_at_full_depth.is_finite()) {
            return bad("cycles at full depth", self.cycles_at_full_depth);
        }
        if !(self.woehler_exponent >= 1.0 && self.woehler_exponent.is_finite()) {
            return bad("Woehler exponent", self.woehler_exponent);
        }
        Ok(())
    }

    pub fn is_bounded(&self) -> bool {
        self.mode == CapacityMode::Bounded
    }

    /// Linear throughput proxy for cycling aging, EUR per MWh of grid-side
    /// throughput in either direction. Used inside linear programs, where the
    /// exact rainflow cost is not representable.
    pub fn throughput_cost_per_mwh(&self) -> f64 {
        self.replacement_cost / (2.0 * self.cycles_at_full_depth * self.capacity)
    }

    /// Cycles to failure at depth `depth`: `N_100 * depth^(-k_p)`.
    pub fn cycles_to_failure(&self, depth: f64) -> f64 {
        if depth <= 0.0 {
            return f64::INFINITY;
        }
        self.cycles_at_full_depth * depth.powf(-self.woehler_exponent)
    }

    /// Damage cost of one cycle of the given depth and weight.
    pub fn cycle_cost(&self, depth: f64, weight: f64) -> f64 {
        if depth <= 0.0 {
            return 0.0;
        }
        weight * self.replacement_cost / self.cycles_to_failure(depth)
    }
}

/// Stored energy as a fraction of capacity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatteryState {
    pub soc: f64,
}

impl BatteryState {
    pub fn new(soc: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&soc) {
            return Err(Error::InvalidInput(format!("state of charge {soc} outside [0, 1]")));
        }
        Ok(Self { soc })
    }

    /// State with arbitrary SOC, for unbounded sizing runs.
    pub fn unbounded(soc: f64) -> Self {
        Self { soc }
    }

    pub fn from_content(content: f64, params: &BatteryParams) -> Self {
        Self {
            soc: content / params.capacity,
        }
    }

    pub fn content(&self, params: &BatteryParams) -> f64 {
        self.soc * params.capacity
    }
}

/// Closed interval of admissible grid-side commands.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CommandRange {
    pub lo: f64,
    pub hi: f64,
}

impl CommandRange {
    pub fn contains(&self, command: f64) -> bool {
        command >= self.lo - FEASIBILITY_TOLERANCE && command <= self.hi + FEASIBILITY_TOLERANCE
    }

    pub fn clamp(&self, command: f64) -> f64 {
        command.clamp(self.lo, self.hi)
    }
}

/// Admissible command interval given SOC and the PV energy available for
/// charging. Both bounds always include zero.
pub fn feasible_command_range(state: &BatteryState, params: &BatteryParams, pv_energy: f64) -> CommandRange {
    let k = params.power_limit;
    let pv_limit = -params.charge_efficiency * pv_energy.max(0.0);
    match params.mode {
        CapacityMode::Bounded => {
            let soc = state.soc.clamp(0.0, 1.0);
            let hi = (params.discharge_efficiency * params.capacity * soc).min(k);
            let room = -(params.capacity * (1.0 - soc)) / params.charge_efficiency;
            let lo = pv_limit.max(room).max(-k);
            CommandRange { lo, hi }
        }
        CapacityMode::Unbounded => CommandRange {
            lo: pv_limit.max(-k),
            hi: k,
        },
    }
}

/// Change of stored energy (MWh) caused by a grid-side command.
pub fn content_change(params: &BatteryParams, command: f64) -> f64 {
    if command >= 0.0 {
        -command / params.discharge_efficiency
    } else {
        -command * params.charge_efficiency
    }
}

/// Applies `command` for one PTU.
pub fn step(state: &BatteryState, params: &BatteryParams, command: f64, pv_energy: f64) -> Result<BatteryState> {
    let range = feasible_command_range(state, params, pv_energy);
    if command > range.hi + FEASIBILITY_TOLERANCE {
        let bound = if params.is_bounded()
            && range.hi < params.power_limit
        {
            "stored energy exhausted"
        } else {
            "power limit (discharge)"
        };
        return Err(Error::ConstraintViolation {
            bound,
            command,
            limit: range.hi,
        });
    }
    if command < range.lo - FEASIBILITY_TOLERANCE {
        let pv_limit = -params.charge_efficiency * pv_energy.max(0.0);
        let bound = if (range.lo - pv_limit).abs() <= f64::EPSILON * pv_limit.abs().max(1.0) {
            "PV-only charging"
        } else if (range.lo + params.power_limit).abs() <= f64::EPSILON * params.power_limit {
            "power limit (charge)"
        } else {
            "capacity (charge)"
        };
        return Err(Error::ConstraintViolation {
            bound,
            command,
            limit: range.lo,
        });
    }
    let soc = state.soc + content_change(params, command) / params.capacity;
    let soc = match params.mode {
        CapacityMode::Bounded => soc.clamp(0.0, 1.0),
        CapacityMode::Unbounded => soc,
    };
    Ok(BatteryState { soc })
}

/// Total aging cost of a list of rainflow cycles.
pub fn aging_cost(cycles: &[Cycle], params: &BatteryParams) -> f64 {
    cycles.iter().map(|c| params.cycle_cost(c.depth, c.weight)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(cap: f64, eta_ch: f64, eta_dis: f64, k: f64) -> BatteryParams {
        BatteryParams::new(cap, eta_ch, eta_dis, k, 100_000.0).unwrap()
    }

    #[test]
    fn empty_battery_cannot_discharge() {
        let r = feasible_command_range(&BatteryState::new(0.0).unwrap(), &params(2.0, 0.9, 0.9, 1.0), 3.0);
        assert_eq!(r.hi, 0.0);
        assert!(r.lo < 0.0);
    }

    #[test]
    fn full_battery_without_pv_cannot_charge() {
        let r = feasible_command_range(&BatteryState::new(1.0).unwrap(), &params(2.0, 0.9, 0.9, 1.0), 0.0);
        assert_eq!(r.lo, 0.0);
        assert!(r.hi > 0.0);
    }

    #[test]
    fn range_hand_evaluation() {
        let r = feasible_command_range(&BatteryState::new(0.5).unwrap(), &params(2.0, 0.9, 0.9, 10.0), 5.0);
        assert!((r.hi - 0.9).abs() < 1e-12);
        assert!((r.lo + 1.0 / 0.9).abs() < 1e-12);
    }

    #[test]
    fn step_examples() {
        let p = params(1.0, 1.0, 1.0, 10.0);
        let s = BatteryState::new(0.5).unwrap();
        assert_eq!(step(&s, &p, 0.0, 0.0).unwrap(), s);
        assert_eq!(step(&s, &p, 0.5, 0.0).unwrap().soc, 0.0);

        let p = params(1.0, 0.9, 1.0, 10.0);
        let s = step(&BatteryState::new(0.0).unwrap(), &p, -1.0, 2.0).unwrap();
        assert!((s.soc - 0.9).abs() < 1e-12);
    }

    #[test]
    fn step_rejects_infeasible_commands() {
        let p = params(1.0, 0.9, 0.9, 0.5);
        let s = BatteryState::new(0.5).unwrap();
        match step(&s, &p, -0.2, 0.1) {
            Err(Error::ConstraintViolation { bound, .. }) => assert_eq!(bound, "PV-only charging"),
            other => panic!("{other:?}"),
        }
        match step(&BatteryState::new(1.0).unwrap(), &p, 0.6, 0.0) {
            Err(Error::ConstraintViolation { bound, .. }) => assert_eq!(bound, "power limit (discharge)"),
            other => panic!("{other:?}"),
        }
        match step(&BatteryState::new(0.1).unwrap(), &p, 0.3, 0.0) {
            Err(Error::ConstraintViolation { bound, .. }) => assert_eq!(bound, "stored energy exhausted"),
            other => panic!("{other:?}"),
        }
        match step(&s, &p, -0.6, 5.0) {
            Err(Error::ConstraintViolation { bound, .. }) => assert_eq!(bound, "power limit (charge)"),
            other => panic!("{other:?}"),
        }
        match step(&BatteryState::new(0.95).unwrap(), &p, -0.3, 5.0) {
            Err(Error::ConstraintViolation { bound, .. }) => assert_eq!(bound, "capacity (charge)"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unbounded_mode_ignores_capacity() {
        let p = params(1.0, 0.9, 0.9, 5.0).with_mode(CapacityMode::Unbounded);
        let s = BatteryState::unbounded(0.0);
        let r = feasible_command_range(&s, &p, 1.0);
        assert_eq!(r.hi, 5.0);
        assert!((r.lo + 0.9).abs() < 1e-12);
        let next = step(&s, &p, 2.0, 0.0).unwrap();
        assert!((next.soc + 2.0 / 0.9).abs() < 1e-12);
    }

    #[test]
    fn aging_cost_examples() {
        let p = BatteryParams {
            cycles_at_full_depth: 5000.0,
            ..params(1.0, 0.9, 0.9, 1.0)
        };
        assert_eq!(aging_cost(&[], &p), 0.0);
        let full = aging_cost(&[Cycle::full(1.0)], &p);
        assert!((full - 20.0).abs() < 1e-12);
        let halves = aging_cost(&[Cycle::half(0.4), Cycle::half(0.4)], &p);
        assert!((halves - aging_cost(&[Cycle::full(0.4)], &p)).abs() < 1e-15);
        assert_eq!(aging_cost(&[Cycle::full(0.0)], &p), 0.0);
    }

    #[test]
    fn throughput_proxy() {
        let p = params(2.0, 0.9, 0.9, 1.0);
        assert!((p.throughput_cost_per_mwh() - 100_000.0 / (2.0 * 5000.0 * 2.0)).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        assert!(BatteryParams::new(0.0, 0.9, 0.9, 1.0, 1.0).is_err());
        assert!(BatteryParams::new(1.0, 1.1, 0.9, 1.0, 1.0).is_err());
        assert!(BatteryParams::new(1.0, 0.9, 0.0, 1.0, 1.0).is_err());
        assert!(BatteryParams::new(1.0, 0.9, 0.9, 0.0, 1.0).is_err());
        assert!(BatteryState::new(1.2).is_err());
    }
}
