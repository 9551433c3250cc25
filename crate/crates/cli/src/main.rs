use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pns_cli::{commands, CliError, Options, Report, RunConfig};

/// Sampling, reconstruction and causal prediction from periodic nonuniform
/// derivative samples.
#[derive(Parser, Debug)]
#[command(name = "pns", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration (flat `key = value` file).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Circle grid for check-cis, abscissa count for curves and traces.
    #[arg(long, global = true)]
    grid: Option<usize>,

    /// Do not print the report.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Check the complete interpolating set condition.
    CheckCis,
    /// Build interpolating (and prediction) kernels.
    Kernels,
    /// Probe the polynomial reproduction order.
    Moments,
    /// Predict the signal for each rate and tabulate errors.
    Predict,
    /// Errors over the rates with the fitted convergence slope.
    Convergence,
    /// Errors for equally spaced and Chebyshev offsets.
    Table1,
}

fn init_threads() {
    let Ok(value) = std::env::var("PNS_THREADS") else {
        return;
    };
    match value.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                log::warn!("could not size the thread pool: {e}");
            }
        }
        _ => log::warn!("ignoring PNS_THREADS = {value:?}; expected a positive integer"),
    }
}

fn run(cli: &Cli, report: &mut Report) -> Result<(), CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::config(None, "--config PATH is required"))?;
    let config = RunConfig::load(path)?;
    let out = cli
        .out
        .clone()
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("pns-out"));
    let opts = Options { out, grid: cli.grid };
    match cli.command {
        Command::CheckCis => commands::check_cis(&config, &opts, report),
        Command::Kernels => commands::kernels(&config, &opts, report),
        Command::Moments => commands::moments(&config, &opts, report),
        Command::Predict => commands::predict(&config, &opts, report),
        Command::Convergence => commands::convergence(&config, &opts, report),
        Command::Table1 => commands::table1(&config, &opts, report),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    init_threads();
    let mut report = Report::default();
    let result = run(&cli, &mut report);
    if !cli.quiet {
        print!("{}", report.as_str());
    }
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
