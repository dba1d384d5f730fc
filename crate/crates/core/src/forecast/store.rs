use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ForecastDistribution;
use crate::error::{Error, Result};
use crate::time::Ptu;

/// Forecast distributions keyed by issue tick, then by target PTU.
///
/// Lookups return the freshest distribution issued at or before the query
/// time; a target that no usable issue covers is an error, never an
/// extrapolation.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ForecastStore {
    issues: BTreeMap<Ptu, BTreeMap<Ptu, ForecastDistribution>>,
}

impl ForecastStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, issue: Ptu, dist: ForecastDistribution) {
        self.issues.entry(issue).or_default().insert(dist.ptu, dist);
    }

    pub fn latest(&self, as_of: Ptu, target: Ptu) -> Result<&ForecastDistribution> {
        self.issues
            .range(..=as_of)
            .rev()
            .find_map(|(_, targets)| targets.get(&target))
            .ok_or(Error::MissingForecast { target, as_of })
    }

    pub fn latest_many(&self, as_of: Ptu, targets: impl IntoIterator<Item = Ptu>) -> Result<Vec<ForecastDistribution>> {
        targets
            .into_iter()
            .map(|t| self.latest(as_of, t).cloned())
            .collect()
    }

    pub fn issue_times(&self) -> impl Iterator<Item = Ptu> + '_ {
        self.issues.keys().copied()
    }

    pub fn issue(&self, issue: Ptu) -> Option<&BTreeMap<Ptu, ForecastDistribution>> {
        self.issues.get(&issue)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Ptu, &ForecastDistribution)> + '_ {
        self.issues
            .iter()
            .flat_map(|(issue, targets)| targets.values().map(move |d| (*issue, d)))
    }

    pub fn len(&self) -> usize {
        self.issues.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }
}
