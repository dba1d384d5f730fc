//! Subcommand implementations. Each returns the directory it wrote.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use pvbess_core::control::{Mode, Objective};
use pvbess_core::simulator::{run, SimulationResult};

use crate::config::{RunConfig, StrategyOverride};
use crate::error::{io_error, CliError, CliResult};
use crate::output::{self, write_file, Manifest};
use crate::report;
use crate::runner::{self, load_data, simulation_input};
use crate::synth::{self, GeneratorSpec};

#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub strategy: Option<StrategyOverride>,
    pub debug_lp: Option<PathBuf>,
}

pub fn load_config(path: &Path, o: &Overrides) -> CliResult<RunConfig> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = o.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &o.output {
        cfg.output = out.clone();
    }
    if let Some(s) = o.strategy {
        cfg.apply_strategy(s);
    }
    Ok(cfg)
}

/// Digest of the configuration as run. The output location does not take
/// part: the same run written to two places has one digest.
pub fn run_digest(cfg: &RunConfig) -> String {
    let mut c = cfg.clone();
    c.output = PathBuf::new();
    c.digest()
}

pub fn simulate(config: &Path, o: &Overrides) -> CliResult<(PathBuf, Manifest, SimulationResult)> {
    let cfg = load_config(config, o)?;
    let data = load_data(&cfg)?;
    let input = simulation_input(&cfg, &data, o.debug_lp.clone())?;
    let result = run(&input)?;
    let manifest = output::write_result(&cfg.output, &result, &run_digest(&cfg))?;
    Ok((cfg.output, manifest, result))
}

pub const BATCH: &str = "batch.json";

/// Index of a multi-run output directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Batch {
    pub config_digest: String,
    /// Run without storage or intra-day trading, for the reduction curves.
    pub reference: String,
    /// Sized runs; the first is the benchmark.
    pub runs: Vec<String>,
}

fn slug(strategy: &str) -> String {
    strategy.replace('/', "_")
}

/// Strategy combinations of the sizing study; the no-intra-day stochastic
/// run is the benchmark.
pub const SIZING_STRATEGIES: [(bool, Mode); 4] = [
    (false, Mode::Stochastic),
    (false, Mode::Deterministic),
    (true, Mode::Deterministic),
    (true, Mode::Stochastic),
];

pub fn size(config: &Path, o: &Overrides) -> CliResult<PathBuf> {
    let mut cfg = load_config(config, o)?;
    cfg.mpc.objective = Objective::ImbalanceMin;
    let data = load_data(&cfg)?;
    let out = cfg.output.clone();
    let mut names = Vec::new();
    let mut results = Vec::new();
    for (use_intraday, mode) in SIZING_STRATEGIES {
        let mut c = cfg.clone();
        c.mpc.use_intraday = use_intraday;
        c.mpc.mode = mode;
        let debug = o.debug_lp.as_ref().map(|d| d.join(format!("{}", names.len())));
        let input = runner::unbounded(simulation_input(&c, &data, debug)?)?;
        let result = run(&input)?;
        let name = slug(&result.metadata.strategy);
        output::write_result(&out.join("runs").join(&name), &result, &run_digest(&c))?;
        names.push(name);
        results.push(result);
    }
    let mut c = cfg.clone();
    c.mpc.use_intraday = false;
    c.battery = None;
    let reference = run(&simulation_input(&c, &data, None)?)?;
    let reference_name = slug(&reference.metadata.strategy);
    output::write_result(&out.join("runs").join(&reference_name), &reference, &run_digest(&c))?;

    let batch = Batch { config_digest: run_digest(&cfg), reference: reference_name, runs: names };
    write_file(&out.join(BATCH), &(serde_json::to_string_pretty(&batch).expect("serializes") + "\n"))?;
    render_sizing(&results, &reference, &out)?;
    Ok(out)
}

fn render_sizing(results: &[SimulationResult], reference: &SimulationResult, out: &Path) -> CliResult<()> {
    let (doc, rows) = report::sizing_json(results)?;
    write_file(&out.join("sizing.json"), &doc)?;
    write_file(&out.join("sizing.csv"), &report::sizing_csv(&rows))?;
    write_file(&out.join("curves.csv"), &report::curves_csv(results, reference)?)?;
    Ok(())
}

pub fn generate_data(spec_path: &Path, o: &Overrides) -> CliResult<PathBuf> {
    let mut spec = GeneratorSpec::load(spec_path)?;
    if let Some(seed) = o.seed {
        spec.seed = seed;
    }
    let out = o
        .output
        .clone()
        .unwrap_or_else(|| spec_path.parent().unwrap_or(Path::new(".")).join("data"));
    let data = synth::generate(&spec)?;
    synth::write(&spec, &data, &out)
}

fn read_batch(dir: &Path) -> CliResult<Option<Batch>> {
    let path = dir.join(BATCH);
    if !path.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(&path).map_err(|e| io_error(&path, e))?;
    serde_json::from_str(&text)
        .map(Some)
        .map_err(|e| CliError::data(format!("{}:{}:{}: {e}", path.display(), e.line(), e.column())))
}

/// Renders reports from stored results without modifying them. A sizing
/// directory re-renders its tables; one result gets its totals and imbalance
/// series; several results get a revenue table and reduction curves against
/// the first.
pub fn report(dirs: &[PathBuf], output: Option<&Path>) -> CliResult<PathBuf> {
    let first = dirs.first().ok_or_else(|| CliError::config("report needs at least one result directory"))?;
    let out = output.map(Path::to_path_buf).unwrap_or_else(|| first.join("report"));
    if dirs.len() == 1 {
        if let Some(batch) = read_batch(first)? {
            let load = |name: &str| output::read_result(&first.join("runs").join(name)).map(|(r, _)| r);
            let results = batch.runs.iter().map(|n| load(n)).collect::<CliResult<Vec<_>>>()?;
            let reference = load(&batch.reference)?;
            render_sizing(&results, &reference, &out)?;
            return Ok(out);
        }
    }
    let results = dirs
        .iter()
        .map(|d| output::read_result(d).map(|(r, _)| r))
        .collect::<CliResult<Vec<_>>>()?;
    let summary: String = results.iter().map(report::summary_text).collect();
    write_file(&out.join("summary.txt"), &summary)?;
    write_file(&out.join("imbalance.csv"), &report::imbalance_csv(&results[0]))?;
    if results.len() > 1 {
        write_file(&out.join("revenue.csv"), &report::revenue_csv(&results)?)?;
        write_file(&out.join("curves.csv"), &report::curves_csv(&results, &results[0])?)?;
    }
    Ok(out)
}
