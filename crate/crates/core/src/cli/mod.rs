//! Command-line front end.
//!
//! Exit codes: 0 success, 2 usage or domain error, 3 solver failure or
//! degenerate instance, 4 I/O error.

mod commands;
pub mod config;

use std::ffi::OsString;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

pub use config::{load_config, parse_config, RawParams, RunConfig};

use crate::error::Error as ModelError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {msg}")]
    Config { path: PathBuf, msg: String },
    #[error("{context}: {source}")]
    Model {
        context: String,
        #[source]
        source: ModelError,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } => 2,
            CliError::Model { source, .. } => match source {
                ModelError::InvalidParameter { .. } | ModelError::Domain(_) => 2,
                ModelError::NotApplicable(_) | ModelError::Degenerate(_) | ModelError::Numerical(_) => 3,
            },
            CliError::Io { .. } => 4,
        }
    }

    pub(crate) fn model(context: impl Into<String>) -> impl FnOnce(ModelError) -> CliError {
        let context = context.into();
        move |source| CliError::Model { context, source }
    }
}

#[derive(Debug, Parser)]
#[command(name = "fwadopt", version, about = "Firewall adoption equilibria, dynamics and policy metrics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON parameter file.
    #[arg(long)]
    pub config: PathBuf,
    /// Root-finding and optimization tolerance.
    #[arg(long, default_value_t = crate::equilibrium::DEFAULT_TOL)]
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimMode {
    Ode,
    Agents,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Utilities, gaps and intrusion probability at one adoption level.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Fraction of hosts with an enabled firewall.
        #[arg(long)]
        x: f64,
    },
    /// Thresholds, equilibrium and sensitivities.
    Equilibrium {
        #[command(flatten)]
        common: Common,
        /// Also write `quantity,value` rows to this file.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Trajectory of the mean-field ODE or of a finite population.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = SimMode::Ode)]
        mode: SimMode,
        /// Population size (agents mode).
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        horizon: f64,
        /// Output spacing of the ODE grid; defaults to 1e-3 / gamma.
        #[arg(long)]
        step: Option<f64>,
        /// Random seed, required in agents mode.
        #[arg(long)]
        seed: Option<u64>,
        /// Initial fraction without a firewall.
        #[arg(long, default_value_t = 1.0)]
        y0: f64,
        /// Initial fraction with an enabled firewall.
        #[arg(long, default_value_t = 0.0)]
        x0: f64,
        /// Output CSV; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Vector field on a lattice of the state simplex.
    Phase {
        #[command(flatten)]
        common: Common,
        /// Lattice points per axis.
        #[arg(long, default_value_t = 50)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Optimum, price of anarchy, prices of shortsightedness and Pi1 choices.
    Policy {
        #[command(flatten)]
        common: Common,
        /// Candidate Pi1 values per view.
        #[arg(long, default_value_t = crate::policy::DEFAULT_SWEEP_POINTS)]
        grid: usize,
        /// Write the per-view objective curves to this file.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Equilibrium and policy metrics along one parameter axis.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Parameter to vary (any config key).
        #[arg(long)]
        axis: String,
        #[arg(long)]
        lo: f64,
        #[arg(long)]
        hi: f64,
        #[arg(long, default_value_t = 11)]
        steps: usize,
        /// Worker threads; 0 uses all cores.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses `args` and runs the command, writing reports to `out` and
/// diagnostics to `err`. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return e.exit_code();
        }
    };
    match commands::dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
