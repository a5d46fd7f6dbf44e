use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use finsler_cli::scenario::{load_scenario, CheckKind};
use finsler_cli::{run_checks, write_geodesic, write_jacobi};

/// Numerical verification of conformal transformation laws for Finsler
/// metrics, plus geodesic and Jacobi-field integration.
#[derive(Parser)]
#[command(name = "finsler", version, disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every check listed in the scenario and emit a JSON report.
    Check(CheckArgs),
    /// Integrate the scenario's geodesic and emit JSON-lines states.
    Geodesic(TrajArgs),
    /// Integrate a Jacobi field along the scenario's geodesic.
    Jacobi(TrajArgs),
    /// Run only the conformal-invariant checks from the scenario.
    Invariants(CheckArgs),
}

#[derive(Args)]
struct CheckArgs {
    /// Path to the scenario JSON file.
    #[arg(long)]
    config: PathBuf,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the scenario's sampling seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Multiply every tolerance by this factor.
    #[arg(long, default_value_t = 1.0)]
    tol_scale: f64,
}

#[derive(Args)]
struct TrajArgs {
    /// Path to the scenario JSON file.
    #[arg(long)]
    config: PathBuf,
    /// Write the trajectory here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the trajectory as CSV to this path.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Override the scenario's sampling seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn open_out(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn run_check_command(args: &CheckArgs, only: Option<&[CheckKind]>) -> Result<bool> {
    let scenario = load_scenario(&args.config)?;
    let report = run_checks(&scenario, args.seed, args.tol_scale, only)?;
    let mut out = open_out(&args.out)?;
    serde_json::to_writer_pretty(&mut out, &report)?;
    writeln!(out)?;
    out.flush()?;
    Ok(report.pass)
}

fn run_traj_command(args: &TrajArgs, jacobi: bool) -> Result<()> {
    let scenario = load_scenario(&args.config)?;
    let mut out = open_out(&args.out)?;
    let mut csv_file = match &args.csv {
        Some(p) => Some(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => None,
    };
    let csv = csv_file.as_mut().map(|w| w as &mut dyn Write);
    if jacobi {
        write_jacobi(&scenario, args.seed, &mut out, csv)?;
    } else {
        write_geodesic(&scenario, args.seed, &mut out, csv)?;
    }
    out.flush()?;
    if let Some(mut w) = csv_file {
        w.flush()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Check(args) => run_check_command(args, None),
        Command::Invariants(args) => {
            run_check_command(args, Some(&[CheckKind::Invariants]))
        }
        Command::Geodesic(args) => run_traj_command(args, false).map(|()| true),
        Command::Jacobi(args) => run_traj_command(args, true).map(|()| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
