use std::cell::RefCell;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{PriceRecord, PriceSeries};
use crate::time::{Ptu, PTUS_PER_DAY};

use super::aggregate::PvSeries;

/// Position of an action within one clock tick. Stages at the same tick run
/// in declaration order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    DayAhead,
    Intraday,
    RealTime,
    Delivery,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataKind {
    RealizedPv,
    Spot,
    Balancing,
}

/// One read of realized data.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Access {
    pub tick: Ptu,
    pub stage: Stage,
    pub kind: DataKind,
    pub target: Ptu,
}

/// Realized data behind an optional read log.
///
/// Spot prices become readable after their day's auction gate; balancing
/// prices and realized PV after their PTU has been delivered.
pub(crate) struct MarketData<'a> {
    prices: &'a PriceSeries,
    pv: &'a PvSeries,
    log: Option<RefCell<Vec<Access>>>,
}

impl<'a> MarketData<'a> {
    pub fn new(prices: &'a PriceSeries, pv: &'a PvSeries, record: bool) -> Self {
        Self {
            prices,
            pv,
            log: record.then(|| RefCell::new(Vec::new())),
        }
    }

    pub fn into_log(self) -> Vec<Access> {
        self.log.map(RefCell::into_inner).unwrap_or_default()
    }

    fn note(&self, tick: Ptu, stage: Stage, kind: DataKind, target: Ptu) {
        if let Some(log) = &self.log {
            log.borrow_mut().push(Access {
                tick,
                stage,
                kind,
                target,
            });
        }
    }

    fn record(&self, q: Ptu) -> Result<&PriceRecord> {
        self.prices.get(q).ok_or_else(|| Error::DataGap {
            what: "price records".into(),
            missing: vec![q],
        })
    }

    pub fn spot(&self, tick: Ptu, stage: Stage, q: Ptu) -> Result<f64> {
        self.note(tick, stage, DataKind::Spot, q);
        Ok(self.record(q)?.spot)
    }

    pub fn balancing(&self, tick: Ptu, stage: Stage, q: Ptu) -> Result<PriceRecord> {
        self.note(tick, stage, DataKind::Balancing, q);
        self.record(q).copied()
    }

    pub fn realized_pv(&self, tick: Ptu, stage: Stage, q: Ptu) -> Result<f64> {
        self.note(tick, stage, DataKind::RealizedPv, q);
        self.pv.get(q).ok_or_else(|| Error::DataGap {
            what: "realized PV".into(),
            missing: vec![q],
        })
    }

    fn covers(&self, q: Ptu) -> bool {
        self.prices.get(q).is_some()
    }

    /// Price record for `q` as known at `tick`.
    ///
    /// The spot price is the cleared one when `q`'s day has been auctioned,
    /// otherwise the cleared spot of the latest earlier day at the same time
    /// of day. Balancing prices come from the latest delivered PTU at the same
    /// time of day, or from the latest delivered PTU when the history is
    /// shorter than a day.
    pub fn price_forecast(&self, tick: Ptu, stage: Stage, q: Ptu) -> Result<PriceRecord> {
        let cleared = |p: Ptu| tick > p.day_ahead_gate();
        let day = PTUS_PER_DAY;
        let spot_src = (0..)
            .map(|k| q - k * day)
            .take_while(|p| self.covers(*p))
            .find(|p| cleared(*p))
            .ok_or_else(|| no_history("cleared spot price", q, tick))?;
        let spot = self.spot(tick, stage, spot_src)?;

        let delivered = tick - 1;
        let bal_src = (1..)
            .map(|k| q - k * day)
            .take_while(|p| self.covers(*p))
            .find(|p| *p <= delivered)
            .or_else(|| self.covers(delivered).then_some(delivered))
            .ok_or_else(|| no_history("balancing price", q, tick))?;
        let bal = self.balancing(tick, stage, bal_src)?;
        Ok(PriceRecord {
            spot,
            pos_imbalance_price: bal.pos_imbalance_price,
            neg_imbalance_price: bal.neg_imbalance_price,
        })
    }
}

fn no_history(what: &str, q: Ptu, tick: Ptu) -> Error {
    Error::InvalidInput(format!("no revealed {what} to forecast {q} at {tick}"))
}
