use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pvbess_cli::commands::{self, Overrides};
use pvbess_cli::config::StrategyOverride;
use pvbess_cli::report;

/// PV plant and battery operation across day-ahead, intra-day and balancing
/// markets. All timestamps are UTC.
#[derive(Parser)]
#[command(name = "pvbess", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long)]
    output: Option<PathBuf>,
    /// objective/mode/id[/bess], e.g. revenue-max/stochastic/no-id.
    #[arg(long)]
    strategy: Option<StrategyOverride>,
    /// Writes every linear program solved to this directory.
    #[arg(long)]
    debug_lp: Option<PathBuf>,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            output: self.output.clone(),
            strategy: self.strategy,
            debug_lp: self.debug_lp.clone(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Replays the study period and writes a result directory.
    Simulate(RunArgs),
    /// Sizes an unbounded battery for the four imbalance strategies.
    Size(RunArgs),
    /// Writes synthetic data tables and a matching run configuration.
    GenerateData {
        /// Generator specification (TOML).
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Defaults to `data/` next to the generator file.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Renders tables and curves from stored result directories.
    Report {
        #[arg(required = true)]
        results: Vec<PathBuf>,
        /// Defaults to `report/` inside the first result directory.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate(args) => commands::simulate(&args.config, &args.overrides()).map(|(dir, manifest, result)| {
            print!("{}", report::summary_text(&result));
            println!("  result digest {}", manifest.result_digest());
            dir
        }),
        Command::Size(args) => commands::size(&args.config, &args.overrides()),
        Command::GenerateData { config, seed, output } => commands::generate_data(
            &config,
            &Overrides { seed, output, ..Overrides::default() },
        ),
        Command::Report { results, output } => commands::report(&results, output.as_deref()),
    };
    match outcome {
        Ok(dir) => {
            println!("wrote {}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("pvbess: {e}");
            ExitCode::from(e.kind.exit_code() as u8)
        }
    }
}
