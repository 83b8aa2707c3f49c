//! `qdecay` — the full decay pipeline as a single executable.
//!
//! Every subcommand reads one JSON run configuration (all fields optional,
//! defaults are the reference double-barrier setup), writes CSV/JSON
//! artifacts into `--out`, and stamps each artifact with the configuration
//! hash so files from different runs can never be confused. Outputs are
//! byte-identical across repeated invocations with the same config and
//! binary.
//!
//! Exit codes: 0 success, 2 invalid input (config, flags, malformed CSV),
//! 3 numerical failure (tagged with the pipeline stage).

mod app;
mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qdecay::Error;

#[derive(Parser)]
#[command(
    name = "qdecay",
    version,
    about = "Resonant-state expansion of quantum decay: poles, survival curves, short-time laws",
    propagate_version = true
)]
pub struct Cli {
    /// JSON run configuration; omitted fields take the reference defaults
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Directory for CSV/JSON artifacts (created if missing)
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,

    /// Worker threads (default: all cores; results do not depend on this)
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,

    /// RNG seed for the noise-injection and self-test commands
    #[arg(long, global = true, value_name = "INT", default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Locate resonance momenta and write the pole table
    Poles {
        /// Number of fourth-quadrant resonances (default from config)
        #[arg(long, value_name = "N")]
        n_poles: Option<usize>,
        /// Right edge of the certification box (nm^-1)
        #[arg(long, value_name = "X")]
        box_re_max: Option<f64>,
        /// Bottom edge of the certification box (nm^-1, negative)
        #[arg(long, value_name = "Y")]
        box_im_max: Option<f64>,
    },
    /// Expansion coefficients of the initial state over the resonances
    Coeffs {
        /// Override the configured initial state: gaussian | sine
        #[arg(long, value_name = "KIND")]
        state: Option<commands::StateKind>,
        /// Gaussian center (nm)
        #[arg(long, value_name = "NM", requires = "state")]
        x0: Option<f64>,
        /// Gaussian width (nm)
        #[arg(long, value_name = "NM", requires = "state")]
        sigma: Option<f64>,
        /// Sinusoidal mode number
        #[arg(long, value_name = "J", requires = "state")]
        j: Option<u32>,
    },
    /// Survival probability S(t) on the configured or overridden time grid
    Survival {
        /// Horizon: plain number = fs, or suffixed like 2tau1
        #[arg(long, value_name = "T")]
        t_max: Option<String>,
        /// Samples on [0, t_max] (only with --t-max)
        #[arg(long, value_name = "N", requires = "t_max")]
        t_points: Option<usize>,
        /// Truncation order override
        #[arg(long, value_name = "N")]
        n_poles: Option<usize>,
    },
    /// Cubic-sum ladder table and the short-time verdict
    Classify,
    /// Fit 1 - S = (t/tau*)^theta to the computed or a supplied curve
    Fit {
        /// two-point | lsq | free (default from config)
        #[arg(long, value_name = "MODE")]
        mode: Option<commands::FitModeArg>,
        /// Fit window lo:hi in the time units of the curve
        #[arg(long, value_name = "LO:HI")]
        window: Option<String>,
        /// CSV with columns t,S[,sigma]; default fits the configured curve
        #[arg(long, value_name = "PATH")]
        input: Option<PathBuf>,
    },
    /// Independent grid propagation of the same initial state
    Oracle {
        /// Spatial step (nm)
        #[arg(long, value_name = "NM")]
        dx: Option<f64>,
        /// Time step (fs); default is the accuracy guard for dx
        #[arg(long, value_name = "FS")]
        dt: Option<f64>,
        /// Free padding on each side, in units of the region length
        #[arg(long, value_name = "F")]
        pad_factor: Option<f64>,
        /// Horizon (fs); default 2 tau_1
        #[arg(long, value_name = "FS")]
        t_max: Option<f64>,
        /// Sample count on [0, t_max]
        #[arg(long, value_name = "N")]
        samples: Option<usize>,
    },
    /// Join two survival CSVs on time and report their deviation
    Compare {
        /// First curve (columns t, S; comments ignored)
        a: PathBuf,
        /// Second curve
        b: PathBuf,
    },
    /// Short-time curves at N and 20N plus the fitted law and verdict
    Figure1,
    /// Noise-injection datasets and both-candidate power-law fits
    Experiment {
        /// Fit a user-supplied CSV (t,S[,sigma]) instead of generating data
        #[arg(long, value_name = "PATH")]
        input: Option<PathBuf>,
    },
    /// Run the Faddeyeva identity suite and print max residuals
    FaddeyevaSelftest,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Numerical { .. } => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}
