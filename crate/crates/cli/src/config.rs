//! Run configuration: one TOML document with `period`, `plants`, `prices`,
//! `battery`, `mpc` and `aggregation` sections. Relative paths resolve
//! against the directory holding the configuration file.

use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use pvbess_core::battery::{BatteryParams, CapacityMode};
use pvbess_core::control::{MpcConfig, Mode, Objective};
use pvbess_core::Ptu;

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Output directory; overridden by `--output`.
    #[serde(default = "default_output")]
    pub output: PathBuf,
    pub period: PeriodConfig,
    pub plants: Vec<PlantConfig>,
    pub prices: PricesConfig,
    #[serde(default)]
    pub battery: Option<BatteryConfig>,
    #[serde(default)]
    pub mpc: MpcSection,
    #[serde(default)]
    pub aggregation: AggregationConfig,
}

fn default_output() -> PathBuf {
    PathBuf::from("output")
}

/// UTC timestamps; both must be midnights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodConfig {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantConfig {
    pub name: String,
    pub capacity_mwp: f64,
    /// Realized PV energy per PTU.
    pub pv: PathBuf,
    pub forecasts: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PricesConfig {
    pub path: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatteryConfig {
    pub capacity_mwh: f64,
    pub eta_ch: f64,
    pub eta_dis: f64,
    pub power_limit_mwh_per_ptu: f64,
    pub replacement_cost: f64,
    #[serde(default = "default_n100")]
    pub n100: f64,
    #[serde(default = "default_woehler")]
    pub woehler_exponent: f64,
    #[serde(default = "default_initial_soc")]
    pub initial_soc: f64,
    #[serde(default)]
    pub mode: CapacityMode,
}

fn default_n100() -> f64 {
    5000.0
}

fn default_woehler() -> f64 {
    1.1
}

fn default_initial_soc() -> f64 {
    0.5
}

impl BatteryConfig {
    pub fn params(&self) -> CliResult<BatteryParams> {
        let mut p = BatteryParams::new(
            self.capacity_mwh,
            self.eta_ch,
            self.eta_dis,
            self.power_limit_mwh_per_ptu,
            self.replacement_cost,
        )
        .map_err(|e| CliError::config(format!("battery: {e}")))?;
        p.cycles_at_full_depth = self.n100;
        p.woehler_exponent = self.woehler_exponent;
        p = p.with_mode(self.mode);
        p.validate().map_err(|e| CliError::config(format!("battery: {e}")))?;
        Ok(p)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MpcSection {
    #[serde(default = "default_objective")]
    pub objective: Objective,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default = "default_true")]
    pub use_intraday: bool,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_scenarios")]
    pub n_scenarios: usize,
    /// Correlation length, in PTUs, of forecast errors across horizon steps.
    #[serde(default = "default_correlation_length")]
    pub correlation_length: f64,
}

fn default_objective() -> Objective {
    Objective::ImbalanceMin
}

fn default_mode() -> Mode {
    Mode::Stochastic
}

fn default_true() -> bool {
    true
}

fn default_horizon() -> usize {
    24
}

fn default_scenarios() -> usize {
    100
}

fn default_correlation_length() -> f64 {
    6.0
}

impl Default for MpcSection {
    fn default() -> Self {
        Self {
            objective: default_objective(),
            mode: default_mode(),
            use_intraday: true,
            horizon: default_horizon(),
            n_scenarios: default_scenarios(),
            correlation_length: default_correlation_length(),
        }
    }
}

impl MpcSection {
    pub fn mpc_config(&self) -> MpcConfig {
        MpcConfig {
            horizon_steps: self.horizon,
            n_scenarios: self.n_scenarios,
            objective: self.objective,
            mode: self.mode,
            use_intraday: self.use_intraday,
        }
    }
}

/// How several plants are merged into one market participant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AggregationConfig {
    /// Joint draws per aggregate forecast distribution.
    #[serde(default = "default_members")]
    pub members: usize,
    /// Equicorrelation of forecast errors across plants.
    #[serde(default)]
    pub cross_plant_correlation: f64,
}

fn default_members() -> usize {
    50
}

impl Default for AggregationConfig {
    fn default() -> Self {
        Self {
            members: default_members(),
            cross_plant_correlation: 0.0,
        }
    }
}

/// `objective/mode/id` with an optional `/bess` or `/no-bess` suffix, as in
/// `revenue-max/deterministic/no-id`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StrategyOverride {
    pub objective: Objective,
    pub mode: Mode,
    pub use_intraday: bool,
    pub battery: Option<bool>,
}

impl std::str::FromStr for StrategyOverride {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split('/').collect();
        if !(3..=4).contains(&parts.len()) {
            return Err(format!("expected objective/mode/id[/bess], got {s:?}"));
        }
        let objective = match parts[0] {
            "imbalance-min" => Objective::ImbalanceMin,
            "revenue-max" => Objective::RevenueMax,
            o => return Err(format!("unknown objective {o:?} (imbalance-min, revenue-max)")),
        };
        let mode = match parts[1] {
            "stochastic" => Mode::Stochastic,
            "deterministic" => Mode::Deterministic,
            m => return Err(format!("unknown mode {m:?} (stochastic, deterministic)")),
        };
        let use_intraday = match parts[2] {
            "id" => true,
            "no-id" => false,
            i => return Err(format!("unknown intra-day flag {i:?} (id, no-id)")),
        };
        let battery = match parts.get(3) {
            None => None,
            Some(&"bess") => Some(true),
            Some(&"no-bess") => Some(false),
            Some(b) => return Err(format!("unknown battery flag {b:?} (bess, no-bess)")),
        };
        Ok(Self { objective, mode, use_intraday, battery })
    }
}

impl RunConfig {
    /// Parses and validates a configuration file, resolving relative paths.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text).map_err(|e| e.context(path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output);
        fix(&mut self.prices.path);
        for plant in &mut self.plants {
            fix(&mut plant.pv);
            fix(&mut plant.forecasts);
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        let (start, end) = self.period_ptus()?;
        if end <= start {
            return Err(CliError::config(format!("period: empty study period [{start}, {end})")));
        }
        if start.slot_of_day() != 0 || end.slot_of_day() != 0 {
            return Err(CliError::config("period: start and end must be midnights (UTC)"));
        }
        if self.plants.is_empty() {
            return Err(CliError::config("plants: at least one plant is required"));
        }
        for p in &self.plants {
            if !(p.capacity_mwp.is_finite() && p.capacity_mwp > 0.0) {
                return Err(CliError::config(format!("plants: {} has non-positive capacity", p.name)));
            }
        }
        if let Some(b) = &self.battery {
            b.params()?;
            if b.mode == CapacityMode::Bounded && !(0.0..=1.0).contains(&b.initial_soc) {
                return Err(CliError::config(format!("battery: initial_soc {} outside [0, 1]", b.initial_soc)));
            }
        }
        self.mpc.mpc_config().validate().map_err(|e| CliError::config(format!("mpc: {e}")))?;
        if !(self.mpc.correlation_length.is_finite() && self.mpc.correlation_length > 0.0) {
            return Err(CliError::config("mpc: correlation_length must be positive"));
        }
        if self.aggregation.members == 0 {
            return Err(CliError::config("aggregation: members must be at least 1"));
        }
        Ok(())
    }

    pub fn period_ptus(&self) -> CliResult<(Ptu, Ptu)> {
        let conv = |t: DateTime<Utc>| Ptu::from_datetime(t).map_err(|e| CliError::config(format!("period: {e}")));
        Ok((conv(self.period.start)?, conv(self.period.end)?))
    }

    pub fn apply_strategy(&mut self, s: StrategyOverride) {
        self.mpc.objective = s.objective;
        self.mpc.mode = s.mode;
        self.mpc.use_intraday = s.use_intraday;
        if s.battery == Some(false) {
            self.battery = None;
        }
    }

    /// SHA-256 of the canonical JSON form. Object keys serialize sorted, so
    /// the digest ignores key order in the source file.
    pub fn digest(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        hex(&Sha256::digest(value.to_string().as_bytes()))
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
seed = 3
[period]
start = "2024-03-01T00:00:00Z"
end = "2024-03-03T00:00:00Z"
[[plants]]
name = "a"
capacity_mwp = 2.7
pv = "pv.csv"
forecasts = "fc.csv"
[prices]
path = "prices.csv"
[battery]
capacity_mwh = 1.0
eta_ch = 0.95
eta_dis = 0.95
power_limit_mwh_per_ptu = 0.5
replacement_cost = 100000
[mpc]
horizon = 12
n_scenarios = 10
"#;

    #[test]
    fn parses_with_defaults() {
        let c = RunConfig::parse(BASE).unwrap();
        assert_eq!(c.mpc.objective, Objective::ImbalanceMin);
        assert!(c.mpc.use_intraday);
        let b = c.battery.as_ref().unwrap();
        assert_eq!((b.n100, b.woehler_exponent, b.initial_soc), (5000.0, 1.1, 0.5));
        assert_eq!(c.period_ptus().unwrap().1 - c.period_ptus().unwrap().0, 96);
    }

    #[test]
    fn digest_ignores_key_order() {
        let reordered = BASE.replace(
            "seed = 3\n[period]\nstart = \"2024-03-01T00:00:00Z\"\nend = \"2024-03-03T00:00:00Z\"",
            "seed = 3\n[period]\nend = \"2024-03-03T00:00:00Z\"\nstart = \"2024-03-01T00:00:00Z\"",
        );
        assert_ne!(reordered, BASE);
        let a = RunConfig::parse(BASE).unwrap();
        let b = RunConfig::parse(&reordered).unwrap();
        assert_eq!(a.digest(), b.digest());
        let c = RunConfig::parse(&BASE.replace("seed = 3", "seed = 4")).unwrap();
        assert_ne!(a.digest(), c.digest());
    }

    #[test]
    fn rejects_bad_sections() {
        assert!(RunConfig::parse(&BASE.replace("2024-03-03T00", "2024-02-03T00")).is_err());
        assert!(RunConfig::parse(&BASE.replace("2024-03-03T00:00", "2024-03-03T06:00")).is_err());
        assert!(RunConfig::parse(&BASE.replace("eta_ch = 0.95", "eta_ch = 1.5")).is_err());
        assert!(RunConfig::parse(&BASE.replace("horizon = 12", "horizon = 0")).is_err());
        let err = RunConfig::parse(&BASE.replace("seed = 3", "seed = 3\ncolour = 1")).unwrap_err();
        assert!(err.message.contains("colour"), "{}", err.message);
    }

    #[test]
    fn strategy_override_parses() {
        let s: StrategyOverride = "revenue-max/deterministic/no-id/no-bess".parse().unwrap();
        assert_eq!(s.objective, Objective::RevenueMax);
        assert_eq!(s.mode, Mode::Deterministic);
        assert!(!s.use_intraday);
        assert_eq!(s.battery, Some(false));
        assert!("imbalance-min/stochastic".parse::<StrategyOverride>().is_err());
        assert!("x/stochastic/id".parse::<StrategyOverride>().is_err());
    }
}
