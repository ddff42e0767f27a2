//! `notchlab` command-line front end.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use output::Format;

#[derive(Debug, Parser)]
#[command(name = "notchlab", version)]
#[command(about = "Design, simulate and fit notch-filtered readout circuits")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by all subcommands.
#[derive(Debug, Args)]
pub struct Common {
    /// Device JSON file; the bundled reference device when omitted.
    #[arg(long, global = true)]
    pub device: Option<PathBuf>,
    /// Geometry or channel name.
    #[arg(long, global = true)]
    pub pair: Option<String>,
    /// Joint qubit state, one letter per channel, e.g. `gegg`.
    #[arg(long, global = true)]
    pub state: Option<String>,
    /// Sweep start (Hz).
    #[arg(long, global = true)]
    pub fmin: Option<f64>,
    /// Sweep stop (Hz).
    #[arg(long, global = true)]
    pub fmax: Option<f64>,
    /// Number of sweep points.
    #[arg(long, global = true)]
    pub points: Option<usize>,
    /// Drive pulse as inline JSON or a path to a JSON file.
    #[arg(long, global = true)]
    pub pulse: Option<String>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format; inferred from the `--out` extension when omitted.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Root-finder or optimizer tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
}

#[derive(Debug, Subcommand)]
#[command(allow_negative_numbers = true)]
enum Command {
    /// Notch frequency of a coupled-line pair.
    Notch,
    /// Transfer impedance of a pair over a frequency sweep.
    Z21,
    /// Notch frequency and exchange coupling against coupled-section length.
    Design(commands::DesignArgs),
    /// Normal modes of the readout network.
    Modes,
    /// Reflection coefficient of the readout network.
    Reflect,
    /// Time-domain field traces under a drive pulse.
    Simulate(commands::SimulateArgs),
    /// Output-field separation between the two states of one qubit.
    Separation(commands::SimulateArgs),
    /// Purcell-limited T1 of notched and capacitive couplers against qubit frequency.
    Purcell(commands::PurcellArgs),
    /// Fit the readout network to measured phase spectra.
    Fit(commands::FitArgs),
    /// Readout error budget.
    Budget(commands::BudgetArgs),
    /// Drive-power calibration from ac Stark shifts.
    Calibrate(commands::CalibrateArgs),
}

/// Failure with its process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self {
            code: 3,
            message: message.into(),
        }
    }
}

impl From<notchlab::Error> for CliError {
    fn from(e: notchlab::Error) -> Self {
        if e.is_input_error() {
            Self::usage(e.to_string())
        } else {
            Self::numerical(e.to_string())
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("NOTCHLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| {
        CliError::usage(format!(
            "NOTCHLAB_THREADS must be a positive integer, got {raw:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::numerical(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let c = &cli.common;
    match cli.command {
        Command::Notch => commands::notch(c),
        Command::Z21 => commands::z21(c),
        Command::Design(a) => commands::design(c, &a),
        Command::Modes => commands::modes(c),
        Command::Reflect => commands::reflect(c),
        Command::Simulate(a) => commands::simulate(c, &a),
        Command::Separation(a) => commands::separation(c, &a),
        Command::Purcell(a) => commands::purcell(c, &a),
        Command::Fit(a) => commands::fit(c, &a),
        Command::Budget(a) => commands::budget(c, &a),
        Command::Calibrate(a) => commands::calibrate(c, &a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
