//! Decision processes: day-ahead bids, intra-day corrections and real-time
//! battery commands, each for imbalance minimization or revenue maximization.

mod bidding;
mod mpc;

pub use bidding::{
    day_ahead_bid_imbalance, intraday_bid_imbalance, intraday_bid_revenue, newsvendor_fractile,
    FRACTILE_CLAMP,
};
pub use mpc::{
    build_day_ahead_revenue_lp, build_realtime_imbalance_lp, build_realtime_revenue_lp,
    day_ahead_bid_revenue, plan_realtime_imbalance, plan_realtime_revenue,
    realtime_control_imbalance, realtime_control_revenue, DayAheadBid, RealtimePlan, MOTION_PENALTY,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecast::{generate_scenarios, CopulaSpec, ForecastDistribution, ScenarioSet};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    #[default]
    ImbalanceMin,
    RevenueMax,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Stochastic,
    Deterministic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MpcConfig {
    /// Receding-horizon length in PTUs.
    pub horizon_steps: usize,
    pub n_scenarios: usize,
    pub objective: Objective,
    pub mode: Mode,
    pub use_intraday: bool,
}

impl Default for MpcConfig {
    fn default() -> Self {
        Self {
            horizon_steps: 24,
            n_scenarios: 100,
            objective: Objective::ImbalanceMin,
            mode: Mode::Stochastic,
            use_intraday: true,
        }
    }
}

impl MpcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon_steps == 0 {
            return Err(Error::InvalidInput("MPC horizon must be at least one step".into()));
        }
        if self.n_scenarios == 0 {
            return Err(Error::InvalidInput("MPC needs at least one scenario".into()));
        }
        Ok(())
    }

    pub fn effective_scenarios(&self) -> usize {
        match self.mode {
            Mode::Deterministic => 1,
            Mode::Stochastic => self.n_scenarios,
        }
    }
}

/// Scenario set for a horizon of marginals.
///
/// With one effective scenario (deterministic mode, or a stochastic run with
/// `n_scenarios == 1`) the set is the single trajectory of marginal means, so
/// both modes coincide exactly.
pub fn build_scenarios(
    marginals: &[ForecastDistribution],
    copula: &CopulaSpec,
    config: &MpcConfig,
    seed: u64,
) -> Result<ScenarioSet> {
    let n = config.effective_scenarios();
    if n == 1 {
        return ScenarioSet::from_marginal_means(marginals);
    }
    let copula = copula.leading(marginals.len())?;
    generate_scenarios(marginals, &copula, n, seed)
}

/// Decisions fixed for a run, one entry per PTU.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DecisionSet {
    /// `(pv part, battery part)` of each day-ahead bid.
    pub day_ahead_bids: Vec<(f64, f64)>,
    pub intraday_bids: Vec<f64>,
    /// Executed grid-side battery commands, positive when discharging.
    pub bess_commands: Vec<f64>,
}

/// Commands closer to zero than this are executed as exactly zero.
pub(crate) const COMMAND_SNAP: f64 = 1e-12;

pub(crate) fn snap(command: f64) -> f64 {
    if command.abs() < COMMAND_SNAP {
        0.0
    } else {
        command
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::Ptu;

    #[test]
    fn deterministic_mode_uses_marginal_means() {
        let marginals: Vec<_> = (0..3)
            .map(|i| ForecastDistribution::new(Ptu(i), vec![1.0, 2.0, 6.0], 20.0).unwrap())
            .collect();
        let copula = CopulaSpec::identity(3);
        let det = MpcConfig {
            mode: Mode::Deterministic,
            ..MpcConfig::default()
        };
        let one = MpcConfig {
            n_scenarios: 1,
            ..MpcConfig::default()
        };
        let a = build_scenarios(&marginals, &copula, &det, 1).unwrap();
        let b = build_scenarios(&marginals, &copula, &one, 99).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.scenario(0), &[3.0, 3.0, 3.0]);
    }

    #[test]
    fn config_validation() {
        assert!(MpcConfig::default().validate().is_ok());
        assert!(MpcConfig {
            horizon_steps: 0,
            ..MpcConfig::default()
        }
        .validate()
        .is_err());
    }
}
