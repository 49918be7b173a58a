//! Command-line front end for `eqroute-core`: JSON/CSV documents, the
//! subcommands behind the `eqroute` binary, and parallel parameter sweeps.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

pub mod commands;
pub mod config;
pub mod doc;
pub mod format;

pub use commands::{run, Outcome};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("out of region: {0}")]
    OutOfRegion(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub(crate) fn config(e: eqroute_core::Error) -> Self {
        Self::Config(e.to_string())
    }

    pub(crate) fn runtime(e: eqroute_core::Error) -> Self {
        Self::Runtime(e.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Runtime(_) => 1,
            CliError::OutOfRegion(_) => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(
    name = "eqroute",
    version,
    about = "Equal-energy routing on 1D sensor chains"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Network config (or verification suite) JSON file.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,

    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Seed for randomized verification suites.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form equal-energy flow on the regular chain.
    SolveRegular,
    /// Equal-energy flow for shifted node positions.
    SolvePerturbed,
    /// Minimax optimum from the LP oracle.
    SolveLp,
    /// Volume boundaries Q_N^min, Q_i^max and region membership.
    StabilityQ,
    /// Stability intervals of single-node shifts.
    StabilityD {
        /// Comma-separated node indices, or `all`.
        #[arg(long, default_value = "all")]
        nodes: String,
    },
    /// Compare closed-form solutions against the LP oracle.
    Verify,
    /// Evaluate the solution over a grid of one parameter.
    Sweep {
        /// `Q<i>` or `d<i>`, e.g. `Q3` or `d1`.
        #[arg(long)]
        param: String,
        /// `LO:HI:STEP`.
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
    },
    /// Feasibility, balance and lifetime report for a solution document.
    Validate {
        /// Solution document to check.
        #[arg(long)]
        flow: PathBuf,
        /// Uniform initial node energy.
        #[arg(long, default_value_t = 1.0)]
        initial_energy: f64,
    },
}
