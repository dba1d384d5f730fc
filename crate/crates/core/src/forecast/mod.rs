//! Probabilistic PV forecasts: per-PTU empirical distributions, scenario sets
//! and Gaussian-copula scenario generation.

mod copula;
mod store;

pub use copula::{fit_copula, generate_scenarios, CopulaSpec};
pub use store::ForecastStore;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::time::{Ptu, PTU_HOURS};

/// Slack allowed when checking values against the physical plant limit.
const RANGE_TOLERANCE: f64 = 1e-9;

/// Empirical predictive distribution of PV energy for one target PTU.
///
/// The quantile function interpolates linearly between the sorted values
/// placed at plotting positions `(i - 0.5) / m` and is flat beyond the
/// outermost positions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForecastDistribution {
    pub ptu: Ptu,
    sorted_values: Vec<f64>,
    /// Installed capacity in MWp; bounds the values by `capacity * PTU_HOURS`.
    pub plant_capacity: f64,
}

impl ForecastDistribution {
    /// Builds a distribution from unsorted samples or quantile values.
    pub fn new(ptu: Ptu, mut values: Vec<f64>, plant_capacity: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput(format!("empty forecast distribution for {ptu}")));
        }
        if !(plant_capacity.is_finite() && plant_capacity > 0.0) {
            return Err(Error::InvalidInput(format!("plant capacity must be positive, got {plant_capacity}")));
        }
        let upper = plant_capacity * PTU_HOURS;
        for v in &values {
            if !v.is_finite() || *v < -RANGE_TOLERANCE || *v > upper + RANGE_TOLERANCE {
                return Err(Error::InvalidInput(format!(
                    "forecast value {v} for {ptu} outside [0, {upper}]"
                )));
            }
        }
        for v in values.iter_mut() {
            *v = v.clamp(0.0, upper);
        }
        values.sort_by(f64::total_cmp);
        Ok(Self {
            ptu,
            sorted_values: values,
            plant_capacity,
        })
    }

    /// Point-mass distribution.
    pub fn degenerate(ptu: Ptu, value: f64, plant_capacity: f64) -> Result<Self> {
        Self::new(ptu, vec![value], plant_capacity)
    }

    pub fn sorted_values(&self) -> &[f64] {
        &self.sorted_values
    }

    pub fn len(&self) -> usize {
        self.sorted_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted_values.is_empty()
    }

    pub fn max_energy(&self) -> f64 {
        self.plant_capacity * PTU_HOURS
    }

    /// Inverse CDF at `tau` in the open unit interval.
    pub fn quantile(&self, tau: f64) -> Result<f64> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::Domain(format!("quantile level {tau} outside (0, 1)")));
        }
        Ok(self.quantile_unchecked(tau))
    }

    pub(crate) fn quantile_unchecked(&self, tau: f64) -> f64 {
        let v = &self.sorted_values;
        let m = v.len();
        let h = tau * m as f64 - 0.5;
        if h <= 0.0 {
            return v[0];
        }
        let lo = h.floor() as usize;
        if lo >= m - 1 {
            return v[m - 1];
        }
        let frac = h - lo as f64;
        v[lo] + frac * (v[lo + 1] - v[lo])
    }

    pub fn median(&self) -> f64 {
        self.quantile_unchecked(0.5)
    }

    /// Mean of the interpolated distribution, which equals the sample mean.
    pub fn mean(&self) -> f64 {
        self.sorted_values.iter().sum::<f64>() / self.sorted_values.len() as f64
    }

    pub fn spread(&self) -> f64 {
        self.sorted_values[self.sorted_values.len() - 1] - self.sorted_values[0]
    }
}

/// Joint PV-energy trajectories over a horizon, one row per scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSet {
    values: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl ScenarioSet {
    pub fn new(values: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("scenario set needs at least one scenario".into()));
        }
        if weights.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: values.len(),
                actual: weights.len(),
            });
        }
        let horizon = values[0].len();
        for row in &values {
            if row.len() != horizon {
                return Err(Error::DimensionMismatch {
                    expected: horizon,
                    actual: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::InvalidInput("scenario values must be finite and non-negative".into()));
            }
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidInput("scenario weights must be non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!("scenario weights sum to {total}, expected 1")));
        }
        Ok(Self { values, weights })
    }

    pub fn uniform(values: Vec<Vec<f64>>) -> Result<Self> {
        let n = values.len().max(1);
        Self::new(values, vec![1.0 / n as f64; n])
    }

    /// Single-scenario set used by deterministic optimization.
    pub fn deterministic(trajectory: Vec<f64>) -> Result<Self> {
        Self::new(vec![trajectory], vec![1.0])
    }

    /// Per-PTU means of the marginals, as a single scenario.
    pub fn from_marginal_means(marginals: &[ForecastDistribution]) -> Result<Self> {
        Self::deterministic(marginals.iter().map(ForecastDistribution::mean).collect())
    }

    pub fn n_scenarios(&self) -> usize {
        self.values.len()
    }

    pub fn horizon(&self) -> usize {
        self.values[0].len()
    }

    pub fn scenario(&self, s: usize) -> &[f64] {
        &self.values[s]
    }

    pub fn scenarios(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Keep only the first `horizon` steps.
    pub fn truncated(&self, horizon: usize) -> Self {
        Self {
            values: self
                .values
                .iter()
                .map(|r| r[..horizon.min(r.len())].to_vec())
                .collect(),
            weights: self.weights.clone(),
        }
    }

    /// Smallest scenario value at each step.
    pub fn step_minimum(&self, step: usize) -> f64 {
        self.values
            .iter()
            .map(|r| r[step])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn expected_trajectory(&self) -> Vec<f64> {
        expected_trajectory(self)
    }
}

/// Weighted per-step mean across scenarios.
pub fn expected_trajectory(set: &ScenarioSet) -> Vec<f64> {
    let mut out = vec![0.0; set.horizon()];
    for (row, w) in set.values.iter().zip(&set.weights) {
        for (acc, v) in out.iter_mut().zip(row) {
            *acc += w * v;
        }
    }
    out
}
