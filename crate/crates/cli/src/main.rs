//! `gausspt`: spectra, covariance evolution, sweeps and figure presets for a
//! lossy cavity coupled to an amplified mechanical resonator.

mod config;
mod figure;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::Format;
use figure::FigureId;

#[derive(Parser, Debug)]
#[command(name = "gausspt", version, about = "Gaussian dynamics of a gain/loss cavity-resonator pair")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: CommonArgs,
}

/// Options shared by every command. Flags override `--config` values.
#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// `key = value` file; `#` starts a comment
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Cavity loss rate; sets the unit of rates and of inverse time
    #[arg(long, global = true)]
    pub kappa: Option<f64>,
    /// Gain-to-loss ratio gamma/kappa
    #[arg(long, global = true)]
    pub s: Option<f64>,
    /// Effective coupling G
    #[arg(long, global = true)]
    pub coupling: Option<f64>,
    /// Thermal occupancy of the resonator bath
    #[arg(long, global = true)]
    pub nth: Option<f64>,
    /// Initial two-mode squeezing
    #[arg(long, global = true)]
    pub r: Option<f64>,
    #[arg(long, global = true)]
    pub t_end: Option<f64>,
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    /// Output file (stdout if omitted); for `figure`, the output directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true, env = "GAUSSPT_THREADS")]
    pub threads: Option<usize>,
    /// Seed for the stochastic oracle
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Drop the input noise and keep only the coherent flow
    #[arg(long, global = true)]
    pub noiseless: bool,
    /// Also write a gnuplot script next to each CSV file
    #[arg(long, global = true)]
    pub plot_script: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Supermode frequencies over a range of G/kappa
    Spectrum {
        #[arg(long)]
        g_min: Option<f64>,
        #[arg(long)]
        g_max: Option<f64>,
        #[arg(long)]
        g_points: Option<usize>,
    },
    /// Entanglement, antibunching and occupations over time
    Evolve,
    /// One row per parameter-grid point
    Sweep {
        /// NAME=START:STOP:COUNT with NAME one of G, s, r, n_th; up to three
        #[arg(long = "axis")]
        axes: Vec<String>,
        /// full_series, death_time, max_en or period_estimate
        #[arg(long)]
        reduction: Option<String>,
        #[arg(long)]
        max_points: Option<usize>,
    },
    /// Data files for one of the preset figures
    Figure {
        #[arg(value_enum)]
        id: Option<FigureId>,
        #[arg(long = "figure", value_enum)]
        figure: Option<FigureId>,
    },
    /// Cross-check the propagators against the oracles
    Verify {
        /// Trajectories in the stochastic ensemble
        #[arg(long)]
        ntraj: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run::dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("gausspt: {:#}", failure.error);
            ExitCode::from(failure.code)
        }
    }
}
