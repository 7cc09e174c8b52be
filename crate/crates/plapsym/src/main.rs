use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use plapsym::pipeline::{run_deficits, run_report, run_solve, run_sweep, PipelineError};
use plapsym::RunConfig;

#[derive(Parser)]
#[command(
    name = "plapsym",
    version,
    about = "p-Laplace Dirichlet solver with quantitative symmetry reports"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the problem; writes mesh.txt and u.txt
    Solve { config: PathBuf },
    /// Solve and write the full bundle: tables.csv, deficits.json, plots/
    Deficits { config: PathBuf },
    /// Run every domain block of an axis file over the base config;
    /// writes sweep.csv and sweep.json
    Sweep {
        config: PathBuf,
        /// Axis file: blank-line-separated blocks of key=value overrides
        #[arg(long)]
        axis: PathBuf,
    },
    /// Summarize a previously written output directory
    Report { dir: PathBuf },
}

fn read_config_file(path: &Path) -> Result<String, PipelineError> {
    std::fs::read_to_string(path)
        .map_err(|e| PipelineError::Config(format!("reading {}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<String, PipelineError> {
    match cli.command {
        Command::Solve { config } => {
            let cfg = RunConfig::parse(&read_config_file(&config)?)?;
            run_solve(&cfg)
        }
        Command::Deficits { config } => {
            let cfg = RunConfig::parse(&read_config_file(&config)?)?;
            run_deficits(&cfg)
        }
        Command::Sweep { config, axis } => {
            run_sweep(&read_config_file(&config)?, &read_config_file(&axis)?)
        }
        Command::Report { dir } => run_report(&dir),
    }
}

fn main() {
    match run(Cli::parse()) {
        Ok(summary) => println!("{summary}"),
        Err(e) => {
            eprintln!("plapsym: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
