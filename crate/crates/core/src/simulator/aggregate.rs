use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecast::{generate_scenarios, CopulaSpec, ForecastDistribution, ForecastStore};
use crate::time::{Ptu, PTU_HOURS};

use super::mix_seed;

/// Realized PV energy per PTU starting at `start`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PvSeries {
    pub start: Ptu,
    pub values: Vec<f64>,
}

impl PvSeries {
    pub fn end(&self) -> Ptu {
        self.start + self.values.len() as i64
    }

    pub fn get(&self, ptu: Ptu) -> Option<f64> {
        let i = ptu - self.start;
        if i < 0 {
            return None;
        }
        self.values.get(i as usize).copied()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantSpec {
    pub name: String,
    /// Installed capacity, MWp.
    pub capacity: f64,
    pub pv: PvSeries,
    pub forecasts: ForecastStore,
}

impl PlantSpec {
    pub fn new(name: impl Into<String>, capacity: f64, pv: PvSeries, forecasts: ForecastStore) -> Result<Self> {
        let name = name.into();
        if !(capacity.is_finite() && capacity > 0.0) {
            return Err(Error::InvalidInput(format!("plant {name}: capacity must be positive")));
        }
        let upper = capacity * PTU_HOURS;
        for (i, v) in pv.values.iter().enumerate() {
            if !v.is_finite() || *v < 0.0 || *v > upper + 1e-9 {
                return Err(Error::InvalidInput(format!(
                    "plant {name}: PV value {v} at {} outside [0, {upper}]",
                    pv.start + i as i64
                )));
            }
        }
        Ok(Self {
            name,
            capacity,
            pv,
            forecasts,
        })
    }

    pub fn max_energy(&self) -> f64 {
        self.capacity * PTU_HOURS
    }
}

/// How several plants are combined into one virtual plant.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregationSpec {
    pub plants: Vec<PlantSpec>,
    /// Dependence between the plants' forecast errors.
    pub cross_plant: CopulaSpec,
    /// Members drawn for each aggregate forecast distribution.
    pub members: usize,
    pub seed: u64,
}

impl AggregationSpec {
    pub fn independent(plants: Vec<PlantSpec>, members: usize, seed: u64) -> Self {
        let n = plants.len();
        Self {
            plants,
            cross_plant: CopulaSpec::identity(n.max(1)),
            members,
            seed,
        }
    }
}

/// Virtual plant with summed capacity and realized series. Each aggregate
/// forecast distribution is the sorted sum of joint member draws across the
/// plants' distributions for the same issue and target.
pub fn aggregate(spec: &AggregationSpec) -> Result<PlantSpec> {
    let plants = &spec.plants;
    let Some(first) = plants.first() else {
        return Err(Error::InvalidInput("aggregation needs at least one plant".into()));
    };
    if plants.len() == 1 {
        return Ok(first.clone());
    }
    if spec.cross_plant.dim() != plants.len() {
        return Err(Error::DimensionMismatch {
            expected: plants.len(),
            actual: spec.cross_plant.dim(),
        });
    }
    if spec.members == 0 {
        return Err(Error::InvalidInput("aggregation needs at least one member".into()));
    }
    for p in &plants[1..] {
        if p.pv.start != first.pv.start || p.pv.values.len() != first.pv.values.len() {
            return Err(Error::InvalidInput(format!(
                "plant {} is not aligned with plant {}: [{}, {}) vs [{}, {})",
                p.name,
                first.name,
                p.pv.start,
                p.pv.end(),
                first.pv.start,
                first.pv.end()
            )));
        }
    }
    let capacity: f64 = plants.iter().map(|p| p.capacity).sum();
    let values = (0..first.pv.values.len())
        .map(|i| plants.iter().map(|p| p.pv.values[i]).sum())
        .collect();

    let mut forecasts = ForecastStore::new();
    for (issue, dist) in first.forecasts.iter() {
        let target = dist.ptu;
        let marginals = plants
            .iter()
            .map(|p| {
                p.forecasts
                    .issue(issue)
                    .and_then(|m| m.get(&target))
                    .cloned()
                    .ok_or(Error::MissingForecast { target, as_of: issue })
                    .map_err(|e| e.at(target))
            })
            .collect::<Result<Vec<ForecastDistribution>>>()?;
        let draws = generate_scenarios(
            &marginals,
            &spec.cross_plant,
            spec.members,
            mix_seed(spec.seed, &[issue.0, target.0]),
        )?;
        let sums = draws.scenarios().iter().map(|row| row.iter().sum()).collect();
        forecasts.insert(issue, ForecastDistribution::new(target, sums, capacity)?);
    }
    let name = plants.iter().map(|p| p.name.as_str()).collect::<Vec<_>>().join("+");
    PlantSpec::new(
        name,
        capacity,
        PvSeries {
            start: first.pv.start,
            values,
        },
        forecasts,
    )
}
