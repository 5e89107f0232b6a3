//! Command-line surface over the tmfield models and pipelines.
//!
//! Subcommands: `simulate`, `fit-spectrum`, `fit-arch`, `fit-field`,
//! `align`, `budget`, `report`. Every run writes a machine-readable
//! manifest into the output directory with the inputs, seed, versions and
//! tolerances needed to re-execute identically.
//!
//! Exit codes: 0 success, 2 input error, 3 convergence failure (partial
//! artifacts are kept).

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use tmfield_cli::{commands, ToleranceProfile};

#[derive(Parser)]
#[command(
    name = "tmfield",
    version,
    about = "Transmons in magnetic fields: simulation, fitting, coherence budgets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic spectroscopy and coherence datasets from a
    /// scenario config.
    Simulate {
        /// Scenario config (TOML, unit-suffixed keys).
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Fit (E_J, E_C) pairs from f01/f02-half records, the linear E_C-E_J
    /// relation, and parity envelopes; emits an E_J curve for single-JJ
    /// devices.
    FitSpectrum {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, value_enum, default_value = "default")]
        tolerance_profile: ToleranceProfile,
    },
    /// Fit SQUID flux arches per in-plane field point.
    FitArch {
        #[arg(long)]
        dataset: PathBuf,
        /// relation.json from fit-spectrum.
        #[arg(long)]
        relation: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Parallel arch fits.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, value_enum, default_value = "default")]
        tolerance_profile: ToleranceProfile,
    },
    /// Fit the in-plane field model to extracted E_J curves, optionally
    /// jointly with a shared critical field.
    FitField {
        /// One or more ej-curve files.
        #[arg(long, required = true)]
        curves: Vec<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        /// Fix the shared GL critical field [T].
        #[arg(long, conflicts_with = "fit_bcrit")]
        bcrit: Option<f64>,
        /// Fit a shared critical field, starting from this value [T].
        #[arg(long)]
        fit_bcrit: Option<f64>,
        #[arg(long, value_enum, default_value = "default")]
        tolerance_profile: ToleranceProfile,
    },
    /// Fit the magnet misalignment from an alignment scan and emit the
    /// software rotation.
    Align {
        #[arg(long)]
        dataset: PathBuf,
        /// SQUID period for the flux-jump exclusion threshold [T].
        #[arg(long)]
        period: f64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Coherence budget decomposition per field point.
    Budget {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// In-plane field points [T]; defaults to the config grid.
        #[arg(long)]
        b_par: Vec<f64>,
    },
    /// Assemble tables and plot-data files from datasets and fit artifacts.
    Report {
        #[arg(long)]
        spectroscopy: Vec<PathBuf>,
        #[arg(long)]
        coherence: Vec<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate { config, out_dir, seed } => {
            commands::simulate::run(&config, &out_dir, seed)
        }
        Command::FitSpectrum { dataset, out_dir, tolerance_profile } => {
            commands::fit_spectrum::run(&dataset, &out_dir, tolerance_profile)
        }
        Command::FitArch { dataset, relation, out_dir, jobs, tolerance_profile } => {
            commands::fit_arch::run(&dataset, &relation, &out_dir, jobs, tolerance_profile)
        }
        Command::FitField { curves, out_dir, bcrit, fit_bcrit, tolerance_profile } => {
            commands::fit_field::run(&curves, &out_dir, bcrit, fit_bcrit, tolerance_profile)
        }
        Command::Align { dataset, period, out_dir } => {
            commands::align::run(&dataset, period, &out_dir)
        }
        Command::Budget { config, out_dir, b_par } => {
            commands::budget::run(&config, &out_dir, &b_par)
        }
        Command::Report { spectroscopy, coherence, out_dir } => {
            commands::report::run(&spectroscopy, &coherence, &out_dir)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tmfield: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
