use crate::error::{Error, Result};
use crate::forecast::ForecastDistribution;
use crate::market::{MarketPosition, PriceRecord};
use crate::time::Ptu;

/// Quantile level used in place of a fractile at or beyond the unit interval.
pub const FRACTILE_CLAMP: f64 = 0.01;

/// Day-ahead volumes minimizing expected absolute imbalance: the per-PTU
/// median. The distributions must cover consecutive PTUs.
pub fn day_ahead_bid_imbalance(dists: &[ForecastDistribution]) -> Result<Vec<f64>> {
    check_consecutive(dists)?;
    Ok(dists.iter().map(ForecastDistribution::median).collect())
}

pub(crate) fn check_consecutive(dists: &[ForecastDistribution]) -> Result<()> {
    let Some(first) = dists.first() else {
        return Err(Error::InvalidInput("no forecast distributions for the bid window".into()));
    };
    let missing: Vec<Ptu> = dists
        .windows(2)
        .flat_map(|w| (w[0].ptu.0 + 1..w[1].ptu.0).map(Ptu))
        .collect();
    if !missing.is_empty() || dists.windows(2).any(|w| w[1].ptu <= w[0].ptu) {
        return Err(Error::DataGap {
            what: format!("forecast distributions from {}", first.ptu),
            missing,
        });
    }
    Ok(())
}

fn check_intraday_gate(ptu: Ptu, now: Ptu) -> Result<()> {
    if now > ptu.intraday_gate() {
        return Err(Error::GateClosed { ptu, now });
    }
    Ok(())
}

/// Intra-day volume cancelling the expected imbalance: the PV part of the
/// day-ahead bid minus the updated median. Positive buys back a shortfall.
pub fn intraday_bid_imbalance(position: &MarketPosition, updated: &ForecastDistribution, now: Ptu) -> Result<f64> {
    check_intraday_gate(position.ptu, now)?;
    Ok(position.day_ahead_pv_part - updated.median())
}

/// Critical fractile `(pi_id - pi_+) / (pi_- - pi_+)` with `pi_id = spot`, or
/// `None` when the deficit price does not exceed the surplus price.
///
/// Written as `a / (a + b)` over the two gaps to spot, so equal gaps give
/// exactly one half and the rule reduces to the median bit for bit.
pub fn newsvendor_fractile(prices: &PriceRecord) -> Option<f64> {
    let below = prices.spot - prices.pos_imbalance_price;
    let above = prices.neg_imbalance_price - prices.spot;
    let spread = below + above;
    if !(prices.neg_imbalance_price > prices.pos_imbalance_price) || !(spread > 0.0) {
        return None;
    }
    Some(below / spread)
}

/// Intra-day volume maximizing expected cash revenue at spot-priced intra-day
/// trades under dual balancing prices.
///
/// Fractiles outside `(0, 1)` are clamped to `FRACTILE_CLAMP` and
/// `1 - FRACTILE_CLAMP`; inverted balancing prices make the revenue
/// non-concave and yield no trade.
pub fn intraday_bid_revenue(
    position: &MarketPosition,
    updated: &ForecastDistribution,
    prices: &PriceRecord,
    now: Ptu,
) -> Result<f64> {
    check_intraday_gate(position.ptu, now)?;
    let Some(tau) = newsvendor_fractile(prices) else {
        return Ok(0.0);
    };
    let tau = tau.clamp(FRACTILE_CLAMP, 1.0 - FRACTILE_CLAMP);
    Ok(position.day_ahead_pv_part - updated.quantile_unchecked(tau))
}
