//! Prices, market positions and per-PTU settlement.
//!
//! Sign conventions: delivered energy is positive towards the grid, intra-day
//! volumes are positive when energy is bought, imbalance is
//! `delivered + intraday - day_ahead` (positive = surplus).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::time::Ptu;

/// Spot price and the two balancing prices of one PTU, in EUR/MWh.
///
/// No ordering between the three prices is assumed; remunerative and inverted
/// balancing prices are legal inputs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriceRecord {
    pub spot: f64,
    /// Price applied to positive imbalance (surplus).
    pub pos_imbalance_price: f64,
    /// Price applied to negative imbalance (deficit).
    pub neg_imbalance_price: f64,
}

impl PriceRecord {
    pub fn new(spot: f64, pos_imbalance_price: f64, neg_imbalance_price: f64) -> Result<Self> {
        let rec = Self {
            spot,
            pos_imbalance_price,
            neg_imbalance_price,
        };
        rec.validate()?;
        Ok(rec)
    }

    /// Single-price record: both balancing prices equal to spot.
    pub fn flat(spot: f64) -> Self {
        Self {
            spot,
            pos_imbalance_price: spot,
            neg_imbalance_price: spot,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.spot.is_finite()
            && self.pos_imbalance_price.is_finite()
            && self.neg_imbalance_price.is_finite()
        {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("non-finite price in {self:?}")))
        }
    }

    /// Whether the dual-price imbalance revenue is concave in the imbalance,
    /// i.e. the deficit price is at least the surplus price.
    pub fn is_concave(&self) -> bool {
        self.neg_imbalance_price >= self.pos_imbalance_price
    }
}

/// Balancing price applied to `imbalance`. Zero imbalance returns the spot
/// price; it multiplies zero either way.
pub fn balancing_price_for(imbalance: f64, prices: &PriceRecord) -> f64 {
    if imbalance > 0.0 {
        prices.pos_imbalance_price
    } else if imbalance < 0.0 {
        prices.neg_imbalance_price
    } else {
        prices.spot
    }
}

/// Contracted volumes for one PTU.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarketPosition {
    pub ptu: Ptu,
    /// Total day-ahead volume sold, `day_ahead_pv_part + day_ahead_bess_part`.
    pub day_ahead_energy: f64,
    pub day_ahead_pv_part: f64,
    pub day_ahead_bess_part: f64,
    /// Intra-day volume, positive when bought.
    pub intraday_energy: f64,
    pub intraday_price: f64,
}

impl MarketPosition {
    pub fn day_ahead(ptu: Ptu, pv_part: f64, bess_part: f64) -> Self {
        Self {
            ptu,
            day_ahead_energy: pv_part + bess_part,
            day_ahead_pv_part: pv_part,
            day_ahead_bess_part: bess_part,
            intraday_energy: 0.0,
            intraday_price: 0.0,
        }
    }

    pub fn with_intraday(mut self, energy: f64, price: f64) -> Self {
        self.intraday_energy = energy;
        self.intraday_price = price;
        self
    }

    /// `delivered + intraday - day_ahead`.
    pub fn imbalance(&self, delivered_total: f64) -> f64 {
        delivered_total + self.intraday_energy - self.day_ahead_energy
    }
}

/// Cash revenue of one PTU:
/// `spot * E_c - pi_id * E_id + (E + E_id - E_c) * pi_B`.
pub fn ptu_revenue(delivered_total: f64, position: &MarketPosition, prices: &PriceRecord) -> f64 {
    let imbalance = position.imbalance(delivered_total);
    prices.spot * position.day_ahead_energy - position.intraday_price * position.intraday_energy
        + imbalance * balancing_price_for(imbalance, prices)
}

/// Aging-penalized revenue used as the optimizer objective:
/// `spot * (E_pv + E_bess) - (E_pv + E_bess + E_id - E_c) * (spot - pi_B) - C`.
///
/// The aging cost is an accounting penalty, not a cash flow.
pub fn penalized_ptu_revenue(
    delivered_pv: f64,
    delivered_bess: f64,
    position: &MarketPosition,
    prices: &PriceRecord,
    aging_cost: f64,
) -> f64 {
    let delivered = delivered_pv + delivered_bess;
    let imbalance = position.imbalance(delivered);
    prices.spot * delivered
        - imbalance * (prices.spot - balancing_price_for(imbalance, prices))
        - aging_cost
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SettlementRecord {
    pub ptu: Ptu,
    pub delivered_pv: f64,
    /// Grid-side battery energy, positive when discharging.
    pub delivered_bess: f64,
    pub imbalance: f64,
    pub revenue: f64,
    pub aging_cost: f64,
    pub penalized_revenue: f64,
}

impl SettlementRecord {
    pub fn delivered(&self) -> f64 {
        self.delivered_pv + self.delivered_bess
    }
}

pub fn settle_ptu(
    delivered_pv: f64,
    delivered_bess: f64,
    position: &MarketPosition,
    prices: &PriceRecord,
    aging_cost: f64,
) -> SettlementRecord {
    let delivered = delivered_pv + delivered_bess;
    SettlementRecord {
        ptu: position.ptu,
        delivered_pv,
        delivered_bess,
        imbalance: position.imbalance(delivered),
        revenue: ptu_revenue(delivered, position, prices),
        aging_cost,
        penalized_revenue: penalized_ptu_revenue(
            delivered_pv,
            delivered_bess,
            position,
            prices,
            aging_cost,
        ),
    }
}

/// Regularly spaced price records starting at `start`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriceSeries {
    pub start: Ptu,
    pub records: Vec<PriceRecord>,
}

impl PriceSeries {
    pub fn new(start: Ptu, records: Vec<PriceRecord>) -> Result<Self> {
        for r in &records {
            r.validate()?;
        }
        Ok(Self { start, records })
    }

    pub fn end(&self) -> Ptu {
        self.start + self.records.len() as i64
    }

    pub fn get(&self, ptu: Ptu) -> Option<&PriceRecord> {
        let idx = ptu - self.start;
        if idx < 0 {
            return None;
        }
        self.records.get(idx as usize)
    }

    pub fn covers(&self, from: Ptu, to: Ptu) -> bool {
        from >= self.start && to <= self.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prices() -> PriceRecord {
        PriceRecord::new(40.0, 30.0, 60.0).unwrap()
    }

    #[test]
    fn balancing_price_sign_dispatch() {
        assert_eq!(balancing_price_for(0.5, &prices()), 30.0);
        assert_eq!(balancing_price_for(-0.5, &prices()), 60.0);
        assert_eq!(balancing_price_for(0.0, &prices()), 40.0);
    }

    #[test]
    fn worked_spot_example() {
        let pos = MarketPosition::day_ahead(Ptu(0), 1.0, 0.0);
        assert_eq!(ptu_revenue(1.0, &pos, &PriceRecord::flat(40.0)), 40.0);
    }

    #[test]
    fn shortfall_settles_at_deficit_price() {
        let pos = MarketPosition::day_ahead(Ptu(0), 1.0, 0.0);
        let r = ptu_revenue(0.8, &pos, &prices());
        assert!((r - 28.0).abs() < 1e-12, "{r}");
    }

    #[test]
    fn intraday_purchase_cancels_shortfall() {
        let pos = MarketPosition::day_ahead(Ptu(0), 1.0, 0.0).with_intraday(0.2, 40.0);
        let r = ptu_revenue(0.8, &pos, &prices());
        assert!((r - 32.0).abs() < 1e-12, "{r}");
    }

    #[test]
    fn penalized_revenue_examples() {
        let pos = MarketPosition::day_ahead(Ptu(0), 1.0, 0.0);
        assert_eq!(penalized_ptu_revenue(1.0, 0.0, &pos, &prices(), 0.0), 40.0);
        let r = penalized_ptu_revenue(0.8, 0.2, &pos, &prices(), 0.5);
        assert!((r - 39.5).abs() < 1e-12);
        // Literal evaluation: 40 * 0.8 - (-0.2) * (40 - 60) = 28.
        let r = penalized_ptu_revenue(0.8, 0.0, &pos, &prices(), 0.0);
        assert!((r - 28.0).abs() < 1e-12, "{r}");
    }

    #[test]
    fn single_price_has_no_kink() {
        let p = PriceRecord::new(40.0, 55.0, 55.0).unwrap();
        let pos = MarketPosition::day_ahead(Ptu(0), 2.0, 0.0).with_intraday(0.3, 41.0);
        for e in [0.0, 1.2, 1.7, 2.5] {
            let expected = 40.0 * 2.0 - 41.0 * 0.3 + (e + 0.3 - 2.0) * 55.0;
            assert!((ptu_revenue(e, &pos, &p) - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_non_finite() {
        assert!(PriceRecord::new(f64::NAN, 1.0, 2.0).is_err());
        assert!(PriceRecord::new(-50.0, -80.0, -10.0).is_ok());
    }

    #[test]
    fn settle_record_invariants() {
        let pos = MarketPosition::day_ahead(Ptu(3), 1.5, 0.5).with_intraday(-0.1, 40.0);
        let s = settle_ptu(1.2, 0.4, &pos, &prices(), 0.7);
        assert!((s.imbalance - (1.2 + 0.4 - 0.1 - 2.0)).abs() < 1e-12);
        assert!((s.penalized_revenue - (penalized_ptu_revenue(1.2, 0.4, &pos, &prices(), 0.0) - 0.7)).abs() < 1e-12);
        assert_eq!(s.ptu, Ptu(3));
    }
}
