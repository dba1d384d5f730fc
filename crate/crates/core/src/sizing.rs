//! Evaluation layer: a-posteriori storage requirements of unbounded runs,
//! imbalance-reduction curves and revenue deltas.
//!
//! Everything here is arithmetic over stored results; nothing re-simulates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulator::{SimulationResult, SummaryTotals};
use crate::time::Ptu;

/// Smallest capacity containing the whole content trajectory: its
/// peak-to-peak excursion.
pub fn required_capacity(trace: &[f64]) -> Result<f64> {
    if trace.is_empty() {
        return Err(Error::InvalidInput("empty content trace".into()));
    }
    let (lo, hi) = trace
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    Ok(hi - lo)
}

/// Initial content that places the unbounded trajectory inside
/// `[0, required_capacity]`.
pub fn contained_initial_content(trace: &[f64]) -> Result<f64> {
    if trace.is_empty() {
        return Err(Error::InvalidInput("empty content trace".into()));
    }
    let lo = trace.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(trace[0] - lo)
}

/// Percent change of the strategy's capacity relative to the benchmark's.
pub fn size_reduction(benchmark_capacity: f64, strategy_capacity: f64) -> Result<f64> {
    if !(benchmark_capacity > 0.0) {
        return Err(Error::Domain(format!("benchmark capacity must be positive, got {benchmark_capacity}")));
    }
    Ok(100.0 * (strategy_capacity - benchmark_capacity) / benchmark_capacity)
}

/// Percent change of cash revenue relative to the baseline.
pub fn revenue_delta(strategy: &SummaryTotals, baseline: &SummaryTotals) -> Result<f64> {
    percent_change(baseline.revenue, strategy.revenue)
}

pub fn percent_change(baseline: f64, value: f64) -> Result<f64> {
    if baseline == 0.0 {
        return Err(Error::Domain("baseline revenue is zero".into()));
    }
    Ok(100.0 * (value - baseline) / baseline)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub ptu: Ptu,
    /// `100 * (1 - cumulative |imbalance| / cumulative benchmark |imbalance|)`.
    pub reduction_percent: f64,
}

fn check_same_period(a: &SimulationResult, b: &SimulationResult) -> Result<()> {
    let (ma, mb) = (&a.metadata, &b.metadata);
    if ma.period_start != mb.period_start || ma.period_end != mb.period_end || a.records.len() != b.records.len() {
        return Err(Error::InvalidInput(format!(
            "period mismatch: [{}, {}) vs [{}, {})",
            ma.period_start, ma.period_end, mb.period_start, mb.period_end
        )));
    }
    if ma.plant != mb.plant {
        return Err(Error::InvalidInput(format!("plant mismatch: {} vs {}", ma.plant, mb.plant)));
    }
    Ok(())
}

/// Cumulative absolute-imbalance reduction against the benchmark, one point
/// per PTU from the first PTU where the benchmark has a nonzero imbalance.
pub fn imbalance_reduction_curve(result: &SimulationResult, benchmark: &SimulationResult) -> Result<Vec<CurvePoint>> {
    check_same_period(result, benchmark)?;
    let mut own = 0.0;
    let mut bench = 0.0;
    let mut out = Vec::new();
    for (r, b) in result.records.iter().zip(&benchmark.records) {
        own += r.settlement.imbalance.abs();
        bench += b.settlement.imbalance.abs();
        if bench > 0.0 {
            out.push(CurvePoint {
                ptu: r.ptu(),
                reduction_percent: 100.0 * (1.0 - own / bench),
            });
        }
    }
    Ok(out)
}

/// Whole-period absolute-imbalance reduction against the benchmark.
pub fn imbalance_reduction(result: &SimulationResult, benchmark: &SimulationResult) -> Result<f64> {
    check_same_period(result, benchmark)?;
    let bench = benchmark.totals().abs_imbalance;
    if bench == 0.0 {
        return Err(Error::Domain("benchmark has no imbalance".into()));
    }
    Ok(100.0 * (1.0 - result.totals().abs_imbalance / bench))
}

/// One row of the storage-requirement table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizingReport {
    pub strategy: String,
    pub required_capacity_mwh: f64,
    pub required_capacity_per_mwp: f64,
    /// Percent change against the benchmark row; zero for the benchmark.
    pub reduction_vs_benchmark: f64,
}

/// Storage-requirement table; the first result is the benchmark.
pub fn sizing_table(results: &[SimulationResult]) -> Result<Vec<SizingReport>> {
    let Some(benchmark) = results.first() else {
        return Err(Error::InvalidInput("no results to size".into()));
    };
    let per_mwp = |r: &SimulationResult| -> Result<(f64, f64)> {
        let mwh = required_capacity(&r.content_trace())?;
        Ok((mwh, mwh / r.metadata.plant_capacity))
    };
    let (_, bench) = per_mwp(benchmark)?;
    results
        .iter()
        .map(|r| {
            check_same_period(r, benchmark)?;
            let (mwh, norm) = per_mwp(r)?;
            Ok(SizingReport {
                strategy: r.metadata.strategy.clone(),
                required_capacity_mwh: mwh,
                required_capacity_per_mwp: norm,
                reduction_vs_benchmark: size_reduction(bench, norm)?,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RevenueRow {
    pub strategy: String,
    pub revenue: f64,
    pub penalized_revenue: f64,
    pub aging_cost: f64,
    pub abs_imbalance: f64,
    pub delta_percent: f64,
}

/// Revenue table; the first result is the baseline.
pub fn revenue_table(results: &[SimulationResult]) -> Result<Vec<RevenueRow>> {
    let Some(baseline) = results.first() else {
        return Err(Error::InvalidInput("no results to compare".into()));
    };
    let base = baseline.totals();
    results
        .iter()
        .map(|r| {
            check_same_period(r, baseline)?;
            let t = r.totals();
            Ok(RevenueRow {
                strategy: r.metadata.strategy.clone(),
                revenue: t.revenue,
                penalized_revenue: t.penalized_revenue,
                aging_cost: t.aging_cost,
                abs_imbalance: t.abs_imbalance,
                delta_percent: revenue_delta(&t, &base)?,
            })
        })
        .collect()
}
