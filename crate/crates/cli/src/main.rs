use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use multiunit_cli::{commands, CliError, FleetFile};
use multiunit_core::{Execution, SolverOptions};

/// Efficiency-optimal load split and unit switching for a fleet of devices.
#[derive(Parser)]
#[command(name = "multiunit", version)]
struct Cli {
    /// Run grid work on a single thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct FleetArg {
    /// Fleet description (TOML).
    fleet: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Check every unit's curve.
    Validate(FleetArg),
    /// Best split of a total input.
    Allocate {
        #[command(flatten)]
        file: FleetArg,
        /// Total input.
        #[arg(long, allow_negative_numbers = true)]
        pt: f64,
        /// Restrict to these units (comma separated ids).
        #[arg(long, value_delimiter = ',')]
        units: Option<Vec<String>>,
    },
    /// Running sets and switching points over a range of total input.
    Schedule {
        #[command(flatten)]
        file: FleetArg,
        /// Lower end of the total-input range.
        #[arg(long, allow_negative_numbers = true)]
        pt_min: f64,
        /// Upper end of the total-input range.
        #[arg(long, allow_negative_numbers = true)]
        pt_max: f64,
        /// Scan spacing before refinement; defaults to a thousandth of the range.
        #[arg(long)]
        scan_step: Option<f64>,
    },
    /// Best commitment at evenly spaced totals, written as CSV.
    Sweep {
        #[command(flatten)]
        file: FleetArg,
        /// Lower end of the total-input range.
        #[arg(long, allow_negative_numbers = true)]
        pt_min: f64,
        /// Upper end of the total-input range.
        #[arg(long, allow_negative_numbers = true)]
        pt_max: f64,
        /// Spacing between rows.
        #[arg(long)]
        step: f64,
        /// CSV destination.
        #[arg(long)]
        out: PathBuf,
    },
    /// Smallest total input that delivers a target output.
    MinInput {
        #[command(flatten)]
        file: FleetArg,
        /// Target total output.
        #[arg(long, allow_negative_numbers = true)]
        wt: f64,
    },
    /// Compare the solver with the brute-force oracle (at most 3 units).
    OracleCheck {
        #[command(flatten)]
        file: FleetArg,
        /// Total input.
        #[arg(long, allow_negative_numbers = true)]
        pt: f64,
        /// Oracle grid spacing; defaults to pt/1000.
        #[arg(long)]
        step: Option<f64>,
    },
}

fn load(arg: &FleetArg) -> Result<FleetFile, CliError> {
    FleetFile::load(&arg.fleet)
}

fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let mut opts = SolverOptions::default();
    if cli.sequential {
        opts.execution = Execution::Sequential;
    }
    match cli.command {
        Command::Validate(file) => commands::validate(&load(&file)?, out),
        Command::Allocate { file, pt, units } => {
            commands::allocate(&load(&file)?, pt, units.as_deref(), &opts, out)
        }
        Command::Schedule { file, pt_min, pt_max, scan_step } => {
            commands::schedule(&load(&file)?, pt_min, pt_max, scan_step, &opts, out)
        }
        Command::Sweep { file, pt_min, pt_max, step, out: path } => {
            commands::sweep(&load(&file)?, pt_min, pt_max, step, &path, &opts, out)
        }
        Command::MinInput { file, wt } => commands::min_input(&load(&file)?, wt, &opts, out),
        Command::OracleCheck { file, pt, step } => commands::oracle_check(&load(&file)?, pt, step, &opts, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let result = run(cli, &mut out);
    let _ = out.flush();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
