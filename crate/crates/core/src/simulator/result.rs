use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{settle_ptu, PriceRecord, PriceSeries, SettlementRecord, MarketPosition};
use crate::time::Ptu;

use super::data::{Access, Stage};

/// Everything that happened to one PTU.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PtuRecord {
    pub position: MarketPosition,
    pub settlement: SettlementRecord,
    /// Realized prices the PTU was settled at.
    pub prices: PriceRecord,
    /// Realized PV energy of the PTU.
    pub pv_energy: f64,
    /// Command returned by the real-time controller, before truncation.
    pub planned_command: f64,
    /// Command applied to the battery, positive when discharging.
    pub executed_command: f64,
    pub soc_before: f64,
    pub soc_after: f64,
    /// Stored energy after delivery, MWh.
    pub content_after: f64,
    /// Median of the forecast used by the real-time controller.
    pub forecast_median: f64,
    pub scenarios_used: usize,
    pub day_ahead_at: Ptu,
    pub intraday_at: Option<Ptu>,
    pub realtime_at: Option<Ptu>,
}

impl PtuRecord {
    pub fn ptu(&self) -> Ptu {
        self.position.ptu
    }

    /// Decision stamps in chronological order: day-ahead, intra-day (if
    /// traded), real time (if a battery is present) and delivery.
    pub fn decision_stamps(&self) -> Vec<(Ptu, Stage)> {
        let mut out = vec![(self.day_ahead_at, Stage::DayAhead)];
        if let Some(t) = self.intraday_at {
            out.push((t, Stage::Intraday));
        }
        if let Some(t) = self.realtime_at {
            out.push((t, Stage::RealTime));
        }
        out.push((self.ptu(), Stage::Delivery));
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub period_start: Ptu,
    pub period_end: Ptu,
    pub seed: u64,
    pub strategy: String,
    pub plant: String,
    pub plant_capacity: f64,
    pub initial_content: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub metadata: RunMetadata,
    pub records: Vec<PtuRecord>,
    /// Reads of realized data, kept only when requested.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub access_log: Vec<Access>,
}

impl SimulationResult {
    /// Stored content before the first PTU followed by the content after each.
    pub fn content_trace(&self) -> Vec<f64> {
        std::iter::once(self.metadata.initial_content)
            .chain(self.records.iter().map(|r| r.content_after))
            .collect()
    }

    pub fn executed_commands(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.executed_command).collect()
    }

    /// Totals over the stored settlements.
    pub fn totals(&self) -> SummaryTotals {
        let mut t = SummaryTotals::default();
        for r in &self.records {
            t.add(&r.position, &r.settlement, &r.prices);
        }
        t
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SummaryTotals {
    pub n_ptus: usize,
    /// Cash revenue, EUR.
    pub revenue: f64,
    pub penalized_revenue: f64,
    pub aging_cost: f64,
    /// Day-ahead sales valued at spot, EUR.
    pub day_ahead_income: f64,
    /// Net intra-day purchases, EUR.
    pub intraday_cost: f64,
    /// Imbalance settlement, EUR; negative when imbalances cost money.
    pub balancing_income: f64,
    pub abs_imbalance: f64,
    pub delivered: f64,
}

impl SummaryTotals {
    fn add(&mut self, pos: &MarketPosition, s: &SettlementRecord, p: &PriceRecord) {
        let day_ahead = p.spot * pos.day_ahead_energy;
        let intraday = pos.intraday_price * pos.intraday_energy;
        self.n_ptus += 1;
        self.revenue += s.revenue;
        self.penalized_revenue += s.penalized_revenue;
        self.aging_cost += s.aging_cost;
        self.day_ahead_income += day_ahead;
        self.intraday_cost += intraday;
        self.balancing_income += s.revenue - day_ahead + intraday;
        self.abs_imbalance += s.imbalance.abs();
        self.delivered += s.delivered();
    }
}

/// Recomputes every PTU's settlement from the stored positions and
/// deliveries against `prices` and totals the result. Pure over the result.
pub fn settle(result: &SimulationResult, prices: &PriceSeries) -> Result<SummaryTotals> {
    let mut totals = SummaryTotals::default();
    for r in &result.records {
        let q = r.ptu();
        let p = prices.get(q).ok_or_else(|| Error::DataGap {
            what: "price records for settlement".into(),
            missing: vec![q],
        })?;
        let s = settle_ptu(
            r.settlement.delivered_pv,
            r.settlement.delivered_bess,
            &r.position,
            p,
            r.settlement.aging_cost,
        );
        totals.add(&r.position, &s, p);
    }
    Ok(totals)
}
