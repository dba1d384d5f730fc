//! Report rendering over stored results. Pure text generation; the same
//! inputs always render the same bytes.

use std::fmt::Write as _;

use serde::Serialize;

use pvbess_core::simulator::SimulationResult;
use pvbess_core::sizing::{imbalance_reduction_curve, revenue_table, sizing_table, SizingReport};

use crate::error::CliResult;

/// `strategy,revenue,penalized_revenue,aging_cost,abs_imbalance,delta_percent`;
/// the first result is the baseline.
pub fn revenue_csv(results: &[SimulationResult]) -> CliResult<String> {
    let mut s = String::from("strategy,plant,revenue,penalized_revenue,aging_cost,abs_imbalance,delta_percent\n");
    for (row, r) in revenue_table(results)?.iter().zip(results) {
        writeln!(
            s,
            "{},{},{},{},{},{},{}",
            row.strategy, r.metadata.plant, row.revenue, row.penalized_revenue, row.aging_cost, row.abs_imbalance, row.delta_percent
        )
        .expect("writing to a String");
    }
    Ok(s)
}

pub fn sizing_csv(rows: &[SizingReport]) -> String {
    let mut s = String::from("strategy,required_capacity_mwh,required_capacity_mwh_per_mwp,reduction_vs_benchmark_percent\n");
    for r in rows {
        writeln!(s, "{},{},{},{}", r.strategy, r.required_capacity_mwh, r.required_capacity_per_mwp, r.reduction_vs_benchmark)
            .expect("writing to a String");
    }
    s
}

#[derive(Serialize)]
struct SizingDocument<'a> {
    plant: &'a str,
    plant_capacity_mwp: f64,
    period_start: String,
    period_end: String,
    /// Required size of the no-intra-day benchmark, MWh/MWp.
    benchmark_size_mwh_per_mwp: f64,
    rows: &'a [SizingReport],
}

/// Storage-requirement summary; `results[0]` is the benchmark.
pub fn sizing_json(results: &[SimulationResult]) -> CliResult<(String, Vec<SizingReport>)> {
    let rows = sizing_table(results)?;
    let m = &results[0].metadata;
    let doc = SizingDocument {
        plant: &m.plant,
        plant_capacity_mwp: m.plant_capacity,
        period_start: m.period_start.to_string(),
        period_end: m.period_end.to_string(),
        benchmark_size_mwh_per_mwp: rows[0].required_capacity_per_mwp,
        rows: &rows,
    };
    Ok((serde_json::to_string_pretty(&doc).expect("serializes") + "\n", rows))
}

/// Cumulative imbalance-reduction curves of every result against `benchmark`,
/// as `strategy,ptu,reduction_percent` rows.
pub fn curves_csv(results: &[SimulationResult], benchmark: &SimulationResult) -> CliResult<String> {
    let mut s = String::from("strategy,ptu,reduction_percent\n");
    for r in results {
        for p in imbalance_reduction_curve(r, benchmark)? {
            writeln!(s, "{},{},{}", r.metadata.strategy, p.ptu, p.reduction_percent).expect("writing to a String");
        }
    }
    Ok(s)
}

/// Per-PTU and cumulative absolute imbalance of one result.
pub fn imbalance_csv(result: &SimulationResult) -> String {
    let mut s = String::from("ptu,abs_imbalance,cumulative_abs_imbalance,content_after\n");
    let mut total = 0.0;
    for r in &result.records {
        total += r.settlement.imbalance.abs();
        writeln!(s, "{},{},{},{}", r.ptu(), r.settlement.imbalance.abs(), total, r.content_after).expect("writing to a String");
    }
    s
}

/// Short human-readable totals.
pub fn summary_text(result: &SimulationResult) -> String {
    let t = result.totals();
    let m = &result.metadata;
    format!(
        "{} on {} ({} MWp), {} PTUs from {}\n  revenue {:.2} EUR (penalized {:.2}, aging {:.2})\n  absolute imbalance {:.4} MWh, delivered {:.4} MWh\n",
        m.strategy, m.plant, m.plant_capacity, t.n_ptus, m.period_start, t.revenue, t.penalized_revenue, t.aging_cost, t.abs_imbalance, t.delivered
    )
}
