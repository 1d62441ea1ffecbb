//! `pcsplit run|sweep|analyze <config.json> [--seed N] [--out PATH]`
//!
//! Exit codes: 0 success, 1 solver or output failure, 2 configuration error.

mod commands;
mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{read_json, ConfigError, ExperimentConfig, SweepConfig};

#[derive(Parser)]
#[command(
    name = "pcsplit",
    version,
    about = "Prediction-correction splitting for time-varying convex problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Overrides the seed in the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; overrides `output_path` in the config. Defaults to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write the per-step CSV.
    Run { config: PathBuf },
    /// Sweep sampling periods for several (P, C, derivative mode) variants.
    Sweep { config: PathBuf },
    /// Print the convergence report of a configuration.
    Analyze { config: PathBuf },
}

enum Failure {
    Config(ConfigError),
    Solver(pcsplit::Error),
    Output(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Solver(_) | Failure::Output(_) => 1,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<pcsplit::Error> for Failure {
    fn from(e: pcsplit::Error) -> Self {
        Failure::Solver(e)
    }
}

fn emit(out: Option<&Path>, contents: &str) -> Result<(), Failure> {
    match out {
        Some(path) => commands::write_output(path, contents)
            .map_err(|e| Failure::Output(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(contents.as_bytes())
            .map_err(|e| Failure::Output(e.to_string())),
    }
}

fn out_path(cli: &Cli, from_config: Option<&String>) -> Option<PathBuf> {
    cli.out.clone().or_else(|| from_config.map(PathBuf::from))
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Run { config } => {
            let exp = read_json::<ExperimentConfig>(config)?.build(cli.seed)?;
            let record = commands::simulate(&exp, &exp.pc)?;
            emit(
                out_path(cli, exp.output_path.as_ref()).as_deref(),
                &commands::run_csv(&record),
            )
        }
        Command::Sweep { config } => {
            let sweep = read_json::<SweepConfig>(config)?.build(cli.seed)?;
            let tables = commands::sweep_tables(&sweep)?;
            emit(
                out_path(cli, sweep.base.output_path.as_ref()).as_deref(),
                &commands::sweep_csv(&tables),
            )
        }
        Command::Analyze { config } => {
            let exp = read_json::<ExperimentConfig>(config)?.build(cli.seed)?;
            let report = commands::analyze(&exp)?;
            print!("{}", commands::report_text(&exp, &report));
            match out_path(cli, exp.output_path.as_ref()) {
                Some(path) => emit(
                    Some(&path),
                    &commands::report_csv(&commands::report_rows(&exp, &report)),
                ),
                None => Ok(()),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Config(e) => eprintln!("config error: {e}"),
                Failure::Solver(e) => eprintln!("solver failure: {e}"),
                Failure::Output(e) => eprintln!("output error: {e}"),
            }
            ExitCode::from(f.exit_code())
        }
    }
}
