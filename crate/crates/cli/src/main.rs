//! `yk`: analytic sweeps and Monte Carlo key distribution runs.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use yk_core::sweep::{Grid, BOUNDARY_RATE_LEVELS, OPAQUE_INTRINSIC_EB, TRADEOFF_SNR_DB};
use yk_core::Execution;

use config::RunArgs;

const EXIT_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 4;

/// Invalid invocation or configuration.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser)]
#[command(name = "yk", version, about = "Noise-based classical key distribution: analysis and simulation")]
struct Cli {
    /// Evaluate on one thread
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form datasets
    #[command(subcommand)]
    Analyze(Analyze),
    /// Full session: transmission, attack, sifting, reconciliation, amplification
    Simulate {
        /// TOML file with the same keys as the flags (snake_case)
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        run: Box<RunArgs>,
    },
}

#[derive(Subcommand)]
enum Analyze {
    /// Decision rate and error rate against the threshold multiplier
    Tradeoff {
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_values_t = TRADEOFF_SNR_DB.to_vec())]
        snr_db: Vec<f64>,
        #[arg(long, default_value_t = 0.0)]
        m_start: f64,
        #[arg(long, default_value_t = 10.0)]
        m_stop: f64,
        #[arg(long, default_value_t = 0.1)]
        m_step: f64,
        /// CSV path [default: stdout]
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Minimum Eve error rate for security against Bob's error rate
    Boundary {
        #[arg(long, default_value_t = 0.0)]
        eb_start: f64,
        #[arg(long, default_value_t = 0.3)]
        eb_stop: f64,
        #[arg(long, default_value_t = 0.005)]
        eb_step: f64,
        /// Secure-rate levels of the translucent family
        #[arg(long, value_delimiter = ',', default_values_t = BOUNDARY_RATE_LEVELS.to_vec())]
        rate_levels: Vec<f64>,
        /// Intrinsic Bob error rates of the opaque family
        #[arg(long, value_delimiter = ',', default_values_t = OPAQUE_INTRINSIC_EB.to_vec())]
        opaque_eb: Vec<f64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    match cli.command {
        Command::Analyze(Analyze::Tradeoff { snr_db, m_start, m_stop, m_step, output }) => {
            commands::analyze_tradeoff(&snr_db, Grid::new(m_start, m_stop, m_step)?, output.as_deref(), exec)?;
            Ok(0)
        }
        Command::Analyze(Analyze::Boundary { eb_start, eb_stop, eb_step, rate_levels, opaque_eb, output }) => {
            let grid = Grid::new(eb_start, eb_stop, eb_step)?;
            commands::analyze_boundary(grid, &rate_levels, &opaque_eb, output.as_deref(), exec)?;
            Ok(0)
        }
        Command::Simulate { config, run } => {
            let file = match &config {
                Some(p) => RunArgs::from_file(p)?,
                None => RunArgs::default(),
            };
            commands::simulate_cmd(&run.layered_over(file).resolve(), exec)
        }
    }
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    if err.is::<UsageError>() {
        return EXIT_USAGE;
    }
    match err.downcast_ref::<yk_core::Error>() {
        Some(yk_core::Error::Config(_) | yk_core::Error::Domain { .. } | yk_core::Error::LengthMismatch { .. }) => EXIT_USAGE,
        _ => EXIT_FAILURE,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
