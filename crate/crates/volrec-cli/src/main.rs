//! `volrec`: exact volume polynomials from the command line.
//!
//! Every subcommand is deterministic: the same invocation prints the same
//! bytes. Failed checks and route mismatches exit with status 1.

mod commands;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "volrec", version, about = "Volume polynomials of moduli spaces of bordered (super) Riemann surfaces")]
pub struct Cli {
    /// Largest level 2g-2+n any command may compute.
    #[arg(long, global = true, env = "VOLREC_LEVEL_MAX", default_value_t = 6)]
    pub level_max: u32,

    /// Output format; `check` defaults to json, everything else to text.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Route {
    Abo,
    Ceo,
    Leaves,
    Genfun,
    /// Stable-graph sum; twisted volumes only.
    Graphs,
    /// Every applicable route, which must agree.
    All,
}

/// Substitutions applied before printing.
#[derive(Debug, Clone, Args)]
pub struct Specialize {
    /// Value of the deformation parameter s. Untwisted volumes default to 1.
    #[arg(long)]
    pub s: Option<String>,
    /// Fix p, replacing the generator q = 1/p^2.
    #[arg(long)]
    pub p: Option<u32>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print V_{g,n}, or V_{g,n}[f^MV] with --twist.
    Volume {
        #[arg(long, default_value = "wp")]
        model: String,
        #[arg(long)]
        g: u32,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        twist: bool,
        #[arg(long, value_enum, default_value_t = Route::Abo)]
        route: Route,
        #[command(flatten)]
        spec: Specialize,
    },
    /// Print the Masur-Veech volume, or its generalisation for another model.
    Mv {
        #[arg(long, default_value = "airy")]
        model: String,
        #[arg(long)]
        g: u32,
        #[arg(long)]
        n: usize,
        /// List the contribution of every stable graph.
        #[arg(long)]
        breakdown: bool,
        #[command(flatten)]
        spec: Specialize,
    },
    /// Print the free energy F_g(t).
    Genfun {
        #[arg(long, default_value = "airy")]
        model: String,
        #[arg(long)]
        g: u32,
        #[arg(long)]
        twist: bool,
        /// Grading level to expand to; defaults to the level budget.
        #[arg(long)]
        level: Option<u32>,
    },
    /// Enumerate stable graphs as DOT and report the twisted graph sum.
    Graphs {
        #[arg(long, default_value = "airy")]
        model: String,
        #[arg(long)]
        g: u32,
        #[arg(long)]
        n: usize,
        /// Drop graphs with a genus-zero vertex.
        #[arg(long)]
        no_genus_zero: bool,
    },
    /// Numeric checks of the spectral kernels.
    Kernels {
        #[command(subcommand)]
        action: KernelAction,
    },
    /// Run acceptance suites and report.
    Check {
        /// Suite to run; repeat for several. All suites when omitted.
        #[arg(long)]
        suite: Vec<String>,
    },
}

#[derive(Debug, Subcommand)]
pub enum KernelAction {
    /// Compare kernel moments with the exact series.
    Check {
        /// Models to check; the acceptance set when omitted.
        #[arg(long)]
        model: Vec<String>,
        #[arg(long, default_value_t = 3)]
        k_max: u32,
        #[arg(long, value_delimiter = ',', default_values_t = [0.5, 1.0, 2.0])]
        t: Vec<f64>,
        #[arg(long, default_value_t = 4)]
        twist_k_max: u32,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(out) => {
            print!("{}", out.stdout);
            if out.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
