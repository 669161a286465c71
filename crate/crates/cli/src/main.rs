//! `landau`: runs particle simulations of the homogeneous Landau equation,
//! parameter sweeps, functional evaluations and plot-data extraction.
//!
//! Exit codes: 0 on success, 1 when a run fails, 2 on usage or configuration
//! errors.

mod commands;
mod error;
mod manifest;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use landau_core::io::{load_config, SnapshotFormat};

use crate::commands::FunctionalRequest;
use crate::error::{CliError, CliResult};
use crate::sweep::Axis;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Binary,
}

impl From<FormatArg> for SnapshotFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => SnapshotFormat::Csv,
            FormatArg::Binary => SnapshotFormat::Binary,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "landau",
    version,
    about = "Particle simulations and diagnostics for the Landau equation"
)]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "LANDAU_WORKERS")]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one simulation, writing snapshots, diagnostics and a manifest.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed of the configuration.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "run")]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
    },
    /// Cross one configuration axis with seeds and tabulate medians.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        axis: Axis,
        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Vec<f64>,
        /// Comma-separated seeds (defaults to the configuration seed).
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
        /// Replicates seeded seed, seed+1, ... when --seeds is absent.
        #[arg(long)]
        replicates: Option<u64>,
        #[arg(long, default_value = "sweep")]
        out: PathBuf,
    },
    /// Evaluate a functional on a preset density and print a JSON report.
    Functionals {
        #[arg(long)]
        preset: String,
        /// One of H, I, D, K_beta, J, D_tensor.
        #[arg(long)]
        functional: String,
        #[arg(long, default_value_t = 0.5)]
        beta: f64,
        /// Comma-separated direction labels in {1, 2, 3} (default: all).
        #[arg(long, value_delimiter = ',')]
        k: Vec<usize>,
        /// Exponent of α(r) = r^γ for the pair functionals.
        #[arg(long, default_value_t = -3.0, allow_negative_numbers = true)]
        gamma: f64,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Grid points per axis for H and I.
        #[arg(long, default_value_t = 81)]
        grid_points: usize,
        /// Tensor order for D_tensor.
        #[arg(long, default_value_t = 3)]
        order: usize,
    },
    /// Extract one diagnostics series from a run directory as two columns.
    Plotdata {
        #[arg(long = "run")]
        run_dir: PathBuf,
        #[arg(long)]
        series: String,
        /// Output file (defaults to standard output).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the invariant self-check suite.
    Verify,
}

fn execute(cli: Cli) -> CliResult<()> {
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(CliError::Usage("--workers must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    match cli.command {
        Command::Simulate {
            config,
            seed,
            out,
            format,
        } => {
            let m = commands::simulate(&config, seed, &out, format.into())?;
            println!("wrote {} artifacts to {}", m.outputs.len(), out.display());
        }
        Command::Sweep {
            config,
            axis,
            values,
            seeds,
            replicates,
            out,
        } => {
            let base = load_config(&config)?;
            let seeds = match (seeds.is_empty(), replicates) {
                (false, None) => seeds,
                (true, Some(r)) => (0..r).map(|i| base.seed.wrapping_add(i)).collect(),
                (true, None) => vec![base.seed],
                (false, Some(_)) => {
                    return Err(CliError::Usage("use either --seeds or --replicates".into()))
                }
            };
            let rows = sweep::sweep(&base, axis, &values, &seeds, &out)?;
            print!("{}", sweep::summary_csv(axis, &rows));
        }
        Command::Functionals {
            preset,
            functional,
            beta,
            k,
            gamma,
            samples,
            seed,
            grid_points,
            order,
        } => {
            let report = commands::functional_report(&FunctionalRequest {
                preset,
                functional,
                beta,
                k,
                gamma,
                samples,
                seed,
                grid_points,
                order,
            })?;
            println!("{}", serde_json::to_string(&report)?);
        }
        Command::Plotdata {
            run_dir,
            series,
            out,
        } => {
            commands::plotdata(&run_dir, &series, out.as_ref())?;
        }
        Command::Verify => commands::verify()?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
