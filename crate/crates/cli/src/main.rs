use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ctcpp_cli::{
    compare_dir, run, validate, CliError, CliResult, ExportLevel, PlannerChoice, RunConfig,
    RunManifest,
};

/// Coverage-tree and terrain-following survey missions over synthetic seabeds.
#[derive(Parser)]
#[command(name = "ctcpp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a config and print the derived bounds and evidence weights.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run missions for each seed and export their artifacts.
    Run(RunArgs),
    /// Tabulate CT minus TF metrics from a run directory.
    Compare {
        /// Directory holding `seed_<n>/{ct,tf}/metrics.json`.
        dir: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum)]
    planner: Option<PlannerChoice>,
    /// Run seeds 0..N.
    #[arg(long, conflicts_with = "seed_list")]
    seeds: Option<u64>,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',')]
    seed_list: Option<Vec<u64>>,
    #[arg(long, value_enum)]
    export: Option<ExportLevel>,
}

fn execute(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Validate { config } => {
            let report = validate(&RunConfig::load(&config)?);
            println!("{report}");
            match report.violation {
                Some(v) => Err(CliError::Config(v)),
                None => Ok(()),
            }
        }
        Command::Run(a) => {
            let seeds = a.seeds.map(|n| (0..n).collect()).or(a.seed_list);
            let manifest = RunManifest::new(a.config, a.out, a.planner, seeds, a.export)?;
            let summary = run(&manifest)?;
            for s in &summary.seeds {
                log::info!("seed {} done", s.seed);
            }
            if let Some(c) = summary.comparison {
                print!("{}", c.table());
            }
            println!(
                "wrote {} seed(s) to {}",
                summary.seeds.len(),
                manifest.out_dir.display()
            );
            Ok(())
        }
        Command::Compare { dir } => {
            print!("{}", compare_dir(&dir)?.table());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CTCPP_LOG", "warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ctcpp: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
