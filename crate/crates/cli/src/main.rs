use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use exdisk_cli::run::{exit_code, run_solve, run_sweep, run_verify, sweep_table, EXIT_CONFIG, EXIT_FAILURE};
use exdisk_cli::{parse_config, Mode, RunConfig};

/// Worker-thread cap for the parallel per-mode solves.
const THREADS_ENV: &str = "EXDISK_THREADS";

#[derive(Parser)]
#[command(name = "exdisk", version, about = "Stationary Navier-Stokes flow past the unit disk, Fourier mode by mode")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the nonlinear problem and write per-mode artifacts.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output` from the config.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the oracle checks; exits non-zero if any fails.
    Verify {
        #[arg(long)]
        quick: bool,
        /// Validated but otherwise unused.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Solve over a grid of (alpha, gamma, rho) and tabulate decay slopes and contraction rates.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn load(path: &PathBuf, mode: Mode, output: Option<PathBuf>) -> Result<RunConfig, i32> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        eprintln!("cannot read {}: {e}", path.display());
        EXIT_CONFIG
    })?;
    let mut cfg = parse_config(&text, Some(mode)).map_err(|e| {
        eprintln!("{e}");
        EXIT_CONFIG
    })?;
    if let Some(o) = output {
        cfg.output = o;
    }
    Ok(cfg)
}

fn configure_threads() {
    let Ok(value) = std::env::var(THREADS_ENV) else { return };
    match value.parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                log::warn!("could not size the thread pool: {e}");
            }
        }
        _ => log::warn!("ignoring {THREADS_ENV}={value:?}"),
    }
}

fn dispatch(cli: Cli) -> Result<(), i32> {
    match cli.command {
        Command::Solve { config, output } => {
            let cfg = load(&config, Mode::Solve, output)?;
            match run_solve(&cfg) {
                Ok(report) => {
                    print!("{}", report.to_key_value());
                    Ok(())
                }
                Err(e) => {
                    eprintln!("solve failed: {e}");
                    Err(exit_code(&e))
                }
            }
        }
        Command::Verify { quick, config, output } => {
            if let Some(path) = config {
                load(&path, Mode::Verify, None)?;
            }
            let report = run_verify(quick, output.as_deref()).map_err(|e| {
                eprintln!("verification aborted: {e}");
                exit_code(&e)
            })?;
            print!("{}", report.to_table());
            if report.all_pass() {
                Ok(())
            } else {
                Err(EXIT_FAILURE)
            }
        }
        Command::Sweep { config, output } => {
            let cfg = load(&config, Mode::Sweep, output)?;
            let rows = run_sweep(&cfg).map_err(|e| {
                eprintln!("sweep failed: {e}");
                exit_code(&e)
            })?;
            print!("{}", sweep_table(&rows, '\t'));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    configure_threads();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => ExitCode::from(code as u8),
    }
}
