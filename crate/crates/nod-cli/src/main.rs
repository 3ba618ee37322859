//! `nod`: benchmark and verification harness for the accelerated splitting
//! solver in `nod-core`.
//!
//! Four subcommands:
//! - `solve`: run a solver on a configured instance, emit the iterate trace
//!   as CSV.
//! - `verify`: probe an instance's claimed constants, emit a JSON report.
//! - `scaling`: sweep one smoothness constant, fit the log-log slope of
//!   iterations-to-epsilon against it.
//! - `ode`: integrate the continuous-time flow and check the exponential
//!   decay envelope.
//!
//! Exit codes: 0 success (budget exhaustion included), 1 config error,
//! 2 divergence or a non-converged sweep point, 3 probe failure, 4 decay
//! envelope violation.

// Validation guards are written as negated range checks, `!(x > 0.0)`,
// so that NaN fails them; `partial_cmp` rewrites would lose that.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod csvout;
mod ode;
mod scaling;
mod solve;
mod verify;

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

/// Everything that can make a subcommand fail, keyed by exit code.
#[derive(Debug)]
pub enum Failure {
    /// Unreadable, malformed, or inconsistent configuration. Exit 1.
    Config(String),
    /// A run blew up, or a sweep point did not reach its target. Exit 2.
    Diverged(String),
    /// A probe contradicted a claimed constant. Exit 3.
    Probe(String),
    /// The integrated flow left the decay envelope. Exit 4.
    Envelope(String),
}

impl Failure {
    fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 1,
            Failure::Diverged(_) => 2,
            Failure::Probe(_) => 3,
            Failure::Envelope(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m)
            | Failure::Diverged(m)
            | Failure::Probe(m)
            | Failure::Envelope(m) => m,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "nod",
    version,
    about = "Accelerated solver harness: runs, probes, scaling sweeps and flow integration"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a solver on a configured instance and write the iterate trace CSV
    Solve(SolveArgs),
    /// Probe an instance against its claimed constants, write a JSON report
    Verify(VerifyArgs),
    /// Sweep a smoothness constant and fit the iteration-complexity slope
    Scaling(ScalingArgs),
    /// Integrate the continuous-time flow and check the decay envelope
    Ode(OdeArgs),
}

#[derive(Args)]
pub struct SolveArgs {
    /// Path to a JSON run config
    #[arg(long)]
    pub config: PathBuf,
    /// Write the trace here, overriding the config's trace_path
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Override the config seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the step size (positive; warns above the certified default)
    #[arg(long)]
    pub eta: Option<f64>,
    /// Override the iteration budget
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Override the residual stopping tolerance
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Args)]
pub struct VerifyArgs {
    /// Path to a JSON verify config
    #[arg(long)]
    pub config: PathBuf,
    /// Write the report here, overriding the config's report_path
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Override the sampling seed
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args)]
pub struct ScalingArgs {
    /// Path to a JSON scaling config
    #[arg(long)]
    pub config: PathBuf,
    /// Write the report here, overriding the config's report_path
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Override the start-point seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the per-point iteration budget
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Override the sweep's target accuracy epsilon
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Args)]
pub struct OdeArgs {
    /// Path to a JSON flow config
    #[arg(long)]
    pub config: PathBuf,
    /// Write the flow CSV here, overriding the config's trace_path
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Override the config seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Test hook: corrupt one certificate sample before the envelope check
    #[arg(long, hide = true)]
    pub corrupt_psi: bool,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                e.exit();
            }
            // Usage mistakes are config errors in this tool's contract.
            let _ = e.print();
            std::process::exit(1);
        }
    };
    let result = match &cli.cmd {
        Cmd::Solve(args) => solve::run(args),
        Cmd::Verify(args) => verify::run(args),
        Cmd::Scaling(args) => scaling::run(args),
        Cmd::Ode(args) => ode::run(args),
    };
    if let Err(failure) = result {
        eprintln!("error: {}", failure.message());
        std::process::exit(failure.exit_code());
    }
}
