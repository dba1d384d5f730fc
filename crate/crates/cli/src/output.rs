//! Result directories: `records.csv` (one row per PTU), `totals.csv` and a
//! `manifest.json` carrying the run metadata, the configuration digest and a
//! SHA-256 digest of every table. Floats are written in shortest round-trip
//! form, so `read_result(write_result(r)) == r` up to the access log, which
//! is not persisted.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use pvbess_core::market::{MarketPosition, PriceRecord, SettlementRecord};
use pvbess_core::simulator::{PtuRecord, RunMetadata, SimulationResult, SummaryTotals};
use pvbess_core::Ptu;

use crate::config::hex;
use crate::error::{io_error, CliError, CliResult};

pub const RECORDS: &str = "records.csv";
pub const TOTALS: &str = "totals.csv";
pub const MANIFEST: &str = "manifest.json";

const COLUMNS: [&str; 26] = [
    "ptu",
    "day_ahead_energy",
    "day_ahead_pv_part",
    "day_ahead_bess_part",
    "intraday_energy",
    "intraday_price",
    "spot",
    "pos_imbalance_price",
    "neg_imbalance_price",
    "pv_energy",
    "planned_command",
    "executed_command",
    "soc_before",
    "soc_after",
    "content_after",
    "forecast_median",
    "scenarios_used",
    "day_ahead_at",
    "intraday_at",
    "realtime_at",
    "delivered_pv",
    "delivered_bess",
    "imbalance",
    "revenue",
    "aging_cost",
    "penalized_revenue",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub metadata: RunMetadata,
    pub config_digest: String,
    /// SHA-256 of each table, by file name.
    pub files: BTreeMap<String, String>,
    pub totals: SummaryTotals,
}

impl Manifest {
    /// Digest over the table digests; equal results give equal digests.
    pub fn result_digest(&self) -> String {
        let mut h = Sha256::new();
        for (name, digest) in &self.files {
            h.update(name.as_bytes());
            h.update(b"=");
            h.update(digest.as_bytes());
            h.update(b"\n");
        }
        hex(&h.finalize())
    }
}

fn opt(t: Option<Ptu>) -> String {
    t.map(|t| t.to_string()).unwrap_or_default()
}

pub fn records_csv(result: &SimulationResult) -> String {
    let mut s = COLUMNS.join(",");
    s.push('\n');
    for r in &result.records {
        let p = &r.position;
        let st = &r.settlement;
        let pr = &r.prices;
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.ptu(),
            p.day_ahead_energy,
            p.day_ahead_pv_part,
            p.day_ahead_bess_part,
            p.intraday_energy,
            p.intraday_price,
            pr.spot,
            pr.pos_imbalance_price,
            pr.neg_imbalance_price,
            r.pv_energy,
            r.planned_command,
            r.executed_command,
            r.soc_before,
            r.soc_after,
            r.content_after,
            r.forecast_median,
            r.scenarios_used,
            r.day_ahead_at,
            opt(r.intraday_at),
            opt(r.realtime_at),
            st.delivered_pv,
            st.delivered_bess,
            st.imbalance,
            st.revenue,
            st.aging_cost,
            st.penalized_revenue,
        )
        .expect("writing to a String");
    }
    s
}

pub fn totals_csv(t: &SummaryTotals) -> String {
    format!(
        "n_ptus,revenue,penalized_revenue,aging_cost,day_ahead_income,intraday_cost,balancing_income,abs_imbalance,delivered\n{},{},{},{},{},{},{},{},{}\n",
        t.n_ptus,
        t.revenue,
        t.penalized_revenue,
        t.aging_cost,
        t.day_ahead_income,
        t.intraday_cost,
        t.balancing_income,
        t.abs_imbalance,
        t.delivered
    )
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

pub fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| io_error(path, e))
}

pub fn write_result(dir: &Path, result: &SimulationResult, config_digest: &str) -> CliResult<Manifest> {
    let totals = result.totals();
    let tables = [(RECORDS, records_csv(result)), (TOTALS, totals_csv(&totals))];
    let mut files = BTreeMap::new();
    for (name, body) in &tables {
        write_file(&dir.join(name), body)?;
        files.insert(name.to_string(), sha256_hex(body.as_bytes()));
    }
    let manifest = Manifest {
        metadata: result.metadata.clone(),
        config_digest: config_digest.to_string(),
        files,
        totals,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_file(&dir.join(MANIFEST), &(json + "\n"))?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> CliResult<Manifest> {
    let path = dir.join(MANIFEST);
    let text = std::fs::read_to_string(&path).map_err(|e| io_error(&path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::data(format!("{}:{}:{}: {e}", path.display(), e.line(), e.column())))
}

fn parse_records(path: &Path, text: &str) -> CliResult<Vec<PtuRecord>> {
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| CliError::data(format!("{}:1:1: {e}", path.display())))?;
    if header.iter().ne(COLUMNS.iter().copied()) {
        return Err(CliError::data(format!("{}:1:1: unexpected columns", path.display())));
    }
    let mut out = Vec::new();
    for row in reader.records() {
        let rec = row.map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        let line = rec.position().map_or(0, |p| p.line());
        let err = |c: usize, m: String| CliError::data(format!("{}:{line}:{}: {m}", path.display(), c + 1));
        let num = |c: usize| -> CliResult<f64> {
            rec[c].parse().map_err(|_| err(c, format!("not a number: {:?}", &rec[c])))
        };
        let ptu = |c: usize| -> CliResult<Ptu> {
            let t = chrono::DateTime::parse_from_rfc3339(&rec[c]).map_err(|e| err(c, e.to_string()))?;
            Ptu::from_datetime(t.to_utc()).map_err(|e| err(c, e.to_string()))
        };
        let opt_ptu = |c: usize| -> CliResult<Option<Ptu>> { if rec[c].is_empty() { Ok(None) } else { ptu(c).map(Some) } };
        let q = ptu(0)?;
        let position = MarketPosition {
            ptu: q,
            day_ahead_energy: num(1)?,
            day_ahead_pv_part: num(2)?,
            day_ahead_bess_part: num(3)?,
            intraday_energy: num(4)?,
            intraday_price: num(5)?,
        };
        out.push(PtuRecord {
            position,
            prices: PriceRecord { spot: num(6)?, pos_imbalance_price: num(7)?, neg_imbalance_price: num(8)? },
            pv_energy: num(9)?,
            planned_command: num(10)?,
            executed_command: num(11)?,
            soc_before: num(12)?,
            soc_after: num(13)?,
            content_after: num(14)?,
            forecast_median: num(15)?,
            scenarios_used: rec[16].parse().map_err(|_| err(16, format!("not a count: {:?}", &rec[16])))?,
            day_ahead_at: ptu(17)?,
            intraday_at: opt_ptu(18)?,
            realtime_at: opt_ptu(19)?,
            settlement: SettlementRecord {
                ptu: q,
                delivered_pv: num(20)?,
                delivered_bess: num(21)?,
                imbalance: num(22)?,
                revenue: num(23)?,
                aging_cost: num(24)?,
                penalized_revenue: num(25)?,
            },
        });
    }
    Ok(out)
}

/// Reads a result directory, checking every table against its digest.
pub fn read_result(dir: &Path) -> CliResult<(SimulationResult, Manifest)> {
    let manifest = read_manifest(dir)?;
    let path = dir.join(RECORDS);
    let text = std::fs::read_to_string(&path).map_err(|e| io_error(&path, e))?;
    let expected = manifest.files.get(RECORDS).map(String::as_str).unwrap_or("");
    if sha256_hex(text.as_bytes()) != expected {
        return Err(CliError::data(format!("{}: contents do not match the manifest digest", path.display())));
    }
    let records = parse_records(&path, &text)?;
    let result = SimulationResult { metadata: manifest.metadata.clone(), records, access_log: Vec::new() };
    Ok((result, manifest))
}
