//! Delimited-text input tables and their writers.
//!
//! Timestamps are ISO-8601 UTC (`2024-01-01T00:00:00Z`) and mark the start of
//! each 30-minute PTU. Every parse error names the file, line and column.
//!
//! - prices: `timestamp,spot,pos_imbalance_price,neg_imbalance_price`
//! - realized PV: `timestamp,energy_mwh`
//! - forecasts: `issue_time,target_time,` then either quantile columns
//!   `q01..q99` or ensemble member columns (any other names). Both are read as
//!   equally weighted sample values.

use std::io::Write;
use std::path::Path;

use chrono::{DateTime, Utc};

use pvbess_core::forecast::{ForecastDistribution, ForecastStore};
use pvbess_core::market::{PriceRecord, PriceSeries};
use pvbess_core::simulator::PvSeries;
use pvbess_core::{Ptu, PTU_HOURS};

use crate::error::{io_error, CliError, CliResult};

const PRICE_HEADER: [&str; 4] = ["timestamp", "spot", "pos_imbalance_price", "neg_imbalance_price"];
const PV_HEADER: [&str; 2] = ["timestamp", "energy_mwh"];

struct Table<'a> {
    path: &'a Path,
    header: csv::StringRecord,
    rows: csv::StringRecordsIntoIter<std::fs::File>,
}

/// Location of one field for error messages.
struct At<'a> {
    path: &'a Path,
    line: u64,
}

impl At<'_> {
    fn err(&self, column: usize, msg: impl std::fmt::Display) -> CliError {
        CliError::data(format!("{}:{}:{}: {msg}", self.path.display(), self.line, column + 1))
    }

    fn number(&self, rec: &csv::StringRecord, column: usize) -> CliResult<f64> {
        let raw = rec.get(column).ok_or_else(|| self.err(column, "missing field"))?;
        let v: f64 = raw.trim().parse().map_err(|_| self.err(column, format!("not a number: {raw:?}")))?;
        if !v.is_finite() {
            return Err(self.err(column, format!("non-finite value {raw:?}")));
        }
        Ok(v)
    }

    fn timestamp(&self, rec: &csv::StringRecord, column: usize) -> CliResult<DateTime<Utc>> {
        let raw = rec.get(column).ok_or_else(|| self.err(column, "missing field"))?;
        DateTime::parse_from_rfc3339(raw.trim())
            .map(|t| t.with_timezone(&Utc))
            .map_err(|e| self.err(column, format!("bad timestamp {raw:?}: {e}")))
    }

    fn ptu(&self, rec: &csv::StringRecord, column: usize) -> CliResult<Ptu> {
        Ptu::from_datetime(self.timestamp(rec, column)?).map_err(|e| self.err(column, e))
    }
}

impl<'a> Table<'a> {
    fn open(path: &'a Path) -> CliResult<Self> {
        let file = std::fs::File::open(path).map_err(|e| io_error(path, e))?;
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(true).from_reader(file);
        let header = reader
            .headers()
            .map_err(|e| CliError::data(format!("{}:1:1: {e}", path.display())))?
            .clone();
        Ok(Self { path, header, rows: reader.into_records() })
    }

    fn expect_header(&self, expected: &[&str]) -> CliResult<()> {
        for (i, name) in expected.iter().enumerate() {
            if self.header.get(i) != Some(*name) {
                return Err(CliError::data(format!(
                    "{}:1:{}: expected column {name:?}, found {:?}",
                    self.path.display(),
                    i + 1,
                    self.header.get(i).unwrap_or("")
                )));
            }
        }
        if self.header.len() != expected.len() {
            return Err(CliError::data(format!(
                "{}:1:{}: unexpected extra column",
                self.path.display(),
                expected.len() + 1
            )));
        }
        Ok(())
    }

    /// Rows with their 1-based line numbers.
    fn for_each(self, mut f: impl FnMut(&At, &csv::StringRecord) -> CliResult<()>) -> CliResult<()> {
        let path = self.path;
        for row in self.rows {
            let rec = row.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                CliError::data(format!("{}:{line}:1: {e}", path.display()))
            })?;
            let line = rec.position().map_or(0, |p| p.line());
            f(&At { path, line }, &rec)?;
        }
        Ok(())
    }
}

/// Checks that `next` directly follows `prev`, listing skipped PTUs.
fn check_step(at: &At, prev: Option<Ptu>, next: Ptu) -> CliResult<()> {
    let Some(prev) = prev else { return Ok(()) };
    if next <= prev {
        return Err(at.err(0, format!("timestamp {next} does not increase (previous {prev})")));
    }
    if next.0 != prev.0 + 1 {
        let missing: Vec<String> = (prev.0 + 1..next.0).take(10).map(|q| Ptu(q).to_string()).collect();
        let more = if next.0 - prev.0 - 1 > 10 { format!(" ... ({} total)", next.0 - prev.0 - 1) } else { String::new() };
        return Err(at.err(0, format!("gap: missing timestamps {}{more}", missing.join(", "))));
    }
    Ok(())
}

pub fn read_prices(path: &Path) -> CliResult<PriceSeries> {
    let table = Table::open(path)?;
    table.expect_header(&PRICE_HEADER)?;
    let mut start = None;
    let mut prev = None;
    let mut records = Vec::new();
    table.for_each(|at, rec| {
        let q = at.ptu(rec, 0)?;
        check_step(at, prev, q)?;
        start.get_or_insert(q);
        prev = Some(q);
        records.push(PriceRecord {
            spot: at.number(rec, 1)?,
            pos_imbalance_price: at.number(rec, 2)?,
            neg_imbalance_price: at.number(rec, 3)?,
        });
        Ok(())
    })?;
    let start = start.ok_or_else(|| CliError::data(format!("{}: no price rows", path.display())))?;
    PriceSeries::new(start, records).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

pub fn read_pv(path: &Path, capacity_mwp: f64) -> CliResult<PvSeries> {
    let table = Table::open(path)?;
    table.expect_header(&PV_HEADER)?;
    let upper = capacity_mwp * PTU_HOURS;
    let mut start = None;
    let mut prev = None;
    let mut values = Vec::new();
    table.for_each(|at, rec| {
        let q = at.ptu(rec, 0)?;
        check_step(at, prev, q)?;
        start.get_or_insert(q);
        prev = Some(q);
        let v = at.number(rec, 1)?;
        if !(0.0..=upper + 1e-9).contains(&v) {
            return Err(at.err(1, format!("energy {v} outside [0, {upper}] for a {capacity_mwp} MWp plant")));
        }
        values.push(v.min(upper));
        Ok(())
    })?;
    let start = start.ok_or_else(|| CliError::data(format!("{}: no PV rows", path.display())))?;
    Ok(PvSeries { start, values })
}

/// Forecast issue times round up to the next PTU boundary, the first tick at
/// which the forecast is usable.
pub fn read_forecasts(path: &Path, capacity_mwp: f64) -> CliResult<ForecastStore> {
    let table = Table::open(path)?;
    if table.header.get(0) != Some("issue_time") || table.header.get(1) != Some("target_time") {
        return Err(CliError::data(format!(
            "{}:1:1: expected columns \"issue_time\", \"target_time\" followed by values",
            path.display()
        )));
    }
    let width = table.header.len();
    if width < 3 {
        return Err(CliError::data(format!("{}:1:3: no value columns", path.display())));
    }
    let mut store = ForecastStore::new();
    table.for_each(|at, rec| {
        if rec.len() != width {
            return Err(at.err(rec.len().min(width), format!("expected {width} fields, found {}", rec.len())));
        }
        let issue = Ptu::ceil_from(at.timestamp(rec, 0)?);
        let target = at.ptu(rec, 1)?;
        let values = (2..width).map(|c| at.number(rec, c)).collect::<CliResult<Vec<f64>>>()?;
        let dist = ForecastDistribution::new(target, values, capacity_mwp).map_err(|e| at.err(2, e))?;
        store.insert(issue, dist);
        Ok(())
    })?;
    if store.is_empty() {
        return Err(CliError::data(format!("{}: no forecast rows", path.display())));
    }
    Ok(store)
}

fn create(path: &Path) -> CliResult<std::io::BufWriter<std::fs::File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    Ok(std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| io_error(path, e))?))
}

fn finish(path: &Path, mut w: impl Write) -> CliResult<()> {
    w.flush().map_err(|e| io_error(path, e))
}

pub fn write_prices(path: &Path, prices: &PriceSeries) -> CliResult<()> {
    let mut w = create(path)?;
    let io = |e| io_error(path, e);
    writeln!(w, "{}", PRICE_HEADER.join(",")).map_err(io)?;
    for (i, r) in prices.records.iter().enumerate() {
        writeln!(w, "{},{},{},{}", prices.start + i as i64, r.spot, r.pos_imbalance_price, r.neg_imbalance_price)
            .map_err(io)?;
    }
    finish(path, w)
}

pub fn write_pv(path: &Path, pv: &PvSeries) -> CliResult<()> {
    let mut w = create(path)?;
    let io = |e| io_error(path, e);
    writeln!(w, "{}", PV_HEADER.join(",")).map_err(io)?;
    for (i, v) in pv.values.iter().enumerate() {
        writeln!(w, "{},{v}", pv.start + i as i64).map_err(io)?;
    }
    finish(path, w)
}

/// Writes member columns `m01..`; every distribution must have `members` values.
pub fn write_forecasts(path: &Path, store: &ForecastStore, members: usize) -> CliResult<()> {
    let mut w = create(path)?;
    let io = |e| io_error(path, e);
    let names: Vec<String> = (1..=members).map(|k| format!("m{k:02}")).collect();
    writeln!(w, "issue_time,target_time,{}", names.join(",")).map_err(io)?;
    for (issue, d) in store.iter() {
        if d.len() != members {
            return Err(CliError::data(format!("forecast for {} has {} members, expected {members}", d.ptu, d.len())));
        }
        write!(w, "{issue},{}", d.ptu).map_err(io)?;
        for v in d.sorted_values() {
            write!(w, ",{v}").map_err(io)?;
        }
        writeln!(w).map_err(io)?;
    }
    finish(path, w)
}
