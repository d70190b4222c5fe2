mod commands;
mod manifest;

use clap::{Parser, Subcommand};
use commands::{Ctx, ExperimentOptions, InputError, Outcome};
use drift_recover::Error;
use std::path::PathBuf;
use std::process::ExitCode;

const THREADS_ENV: &str = "DRIFT_RECOVER_THREADS";

#[derive(Parser)]
#[command(name = "drift-recover", version, about = "Drift coefficient reconstruction from terminal observations")]
struct Cli {
    /// Scenario configuration (JSON). Defaults to the reference setup.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Suppress progress messages on stderr.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the forward problem and write (noisy) terminal data `g.csv`.
    GenerateData {
        /// Produce data on the inversion grid itself.
        #[arg(long)]
        inverse_crime: bool,
    },
    /// Reconstruct the drift from terminal data.
    Invert {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Manufactured-solution convergence study of the forward solver.
    Mms,
    /// Full study for one target: noise-free plus every noise level.
    Experiment {
        /// smooth, piecewise or character
        name: String,
        /// Noise seeds, comma separated.
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
        #[arg(long)]
        inverse_crime: bool,
        /// Skip the noise-free run.
        #[arg(long)]
        noise_only: bool,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Re-run the command recorded in a manifest.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
    },
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<InputError>().is_some() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::ForwardFailure { .. } | Error::SingularMatrix { .. } | Error::NonFiniteStep { .. } => 3,
                Error::DegenerateData(_) => 5,
                Error::InvalidGrid(_)
                | Error::GridMismatch(_)
                | Error::DimensionMismatch { .. }
                | Error::InvalidParameter { .. }
                | Error::Parse { .. }
                | Error::Config { .. } => 2,
                _ => 1,
            };
        }
    }
    1
}

fn configure_threads() -> Result<(), InputError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| InputError(format!("{THREADS_ENV}={raw:?} is not a thread count")))?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| InputError(format!("{THREADS_ENV}: {e}")))?;
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    configure_threads()?;
    let ctx = Ctx { quiet: cli.quiet };
    if let Command::Replay { manifest } = &cli.command {
        return commands::replay(manifest, &cli.out, &ctx);
    }
    let cfg = commands::load_config(cli.config.as_deref())?;
    match cli.command {
        Command::GenerateData { inverse_crime } => commands::generate_data(&cfg, inverse_crime, &cli.out, &ctx),
        Command::Invert { data, max_iters, tol } => commands::invert(&cfg, &data, max_iters, tol, &cli.out, &ctx),
        Command::Mms => commands::mms(&cfg, &cli.out, &ctx),
        Command::Experiment { name, seeds, inverse_crime, noise_only, max_iters, tol } => {
            let opts = ExperimentOptions { seeds, inverse_crime, noise_only, max_iters, tol };
            commands::experiment(&name, &cfg, &opts, &cli.out, &ctx)
        }
        Command::Replay { .. } => unreachable!(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Diverged) => {
            eprintln!("error: iteration diverged (outputs written)");
            ExitCode::from(4)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
