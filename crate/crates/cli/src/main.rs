//! `wbflow` command-line driver.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wbflow::io::run::{EXIT_CONFIG, EXIT_IO, EXIT_VERIFICATION};
use wbflow::io::{emit_report, exit_code, parse_config, render, run_experiment, Command, ExperimentConfig};

#[derive(Parser)]
#[command(name = "wbflow", version, about = "Boundary-reservoir transport, JKO trajectories and finite-difference references")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// One JKO trajectory with per-step diagnostics.
    Solve(RunArgs),
    /// τ-refinement study against the finite-difference reference.
    Sweep(RunArgs),
    /// Finite-difference reference solve.
    Oracle(RunArgs),
    /// JKO trajectory against the finite-difference reference.
    Compare(RunArgs),
    /// Sampling audit of the model assumptions.
    Audit(RunArgs),
    /// Invariant suites on small grids, including brute-force equivalence.
    Verify(RunArgs),
    /// Print a configuration with every default filled in.
    Config {
        /// Configuration to normalize; defaults are used when omitted.
        config: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration; defaults describe the stationary model.
    config: Option<PathBuf>,
    /// Output directory, overriding `output.dir`.
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Print the summary without writing CSV files.
    #[arg(long)]
    dry_run: bool,
}

fn load(path: Option<&PathBuf>) -> Result<ExperimentConfig, ExitCode> {
    let Some(path) = path else { return Ok(ExperimentConfig::default()) };
    let text = std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        ExitCode::from(EXIT_IO as u8)
    })?;
    parse_config(&text).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        ExitCode::from(EXIT_CONFIG as u8)
    })
}

fn run(command: Command, args: &RunArgs) -> ExitCode {
    let cfg = match load(args.config.as_ref()) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let report = match run_experiment(&cfg, command) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e) as u8);
        }
    };
    let dir = args.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    match emit_report(&report, (!args.dry_run).then_some(dir.as_path())) {
        Ok(text) => print!("{text}"),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e) as u8);
        }
    }
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_VERIFICATION as u8)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Cmd::Solve(a) => run(Command::Solve, a),
        Cmd::Sweep(a) => run(Command::Sweep, a),
        Cmd::Oracle(a) => run(Command::Oracle, a),
        Cmd::Compare(a) => run(Command::Compare, a),
        Cmd::Audit(a) => run(Command::Audit, a),
        Cmd::Verify(a) => run(Command::Verify, a),
        Cmd::Config { config } => match load(config.as_ref()) {
            Ok(cfg) => {
                print!("{}", render(&cfg));
                ExitCode::SUCCESS
            }
            Err(code) => code,
        },
    }
}
