//! `choreo`: check, amend and serve asserted choreographies.
//!
//! Exit status: 0 clean or repaired, 1 violations remain, 2 usage or parse
//! error, 3 solver error.

mod amend;
mod check;
mod input;
mod serve;

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use choreo_core::logic::{Formula, Solver, SolverConfig, DEFAULT_TIMEOUT_MS};

pub const CLEAN: u8 = 0;
pub const VIOLATIONS: u8 = 1;
pub const USAGE: u8 = 2;
pub const SOLVER: u8 = 3;

#[derive(Parser)]
#[command(name = "choreo", version, about = "Check and amend asserted choreographies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct SolverArgs {
    /// External SMT-LIB solver command, e.g. "z3 -in"; the built-in
    /// procedure is used when absent.
    #[arg(long, env = "CHOREO_SOLVER_CMD", global = true)]
    solver_cmd: Option<String>,
    /// Per-query solver timeout in milliseconds.
    #[arg(long, default_value_t = DEFAULT_TIMEOUT_MS, global = true)]
    timeout_ms: u64,
}

impl SolverArgs {
    pub fn config(&self) -> SolverConfig {
        let cmd = self
            .solver_cmd
            .as_deref()
            .map(|c| c.split_whitespace().map(str::to_string).collect::<Vec<_>>())
            .filter(|argv| !argv.is_empty());
        SolverConfig { cmd, timeout_ms: self.timeout_ms }
    }

    /// Builds the solver and makes sure it answers a trivial query.
    pub fn solver(&self) -> Result<Arc<dyn Solver>, String> {
        let solver = self.config().build();
        match solver.is_valid(&Formula::True) {
            Ok(true) => Ok(solver),
            Ok(false) => Err(format!("solver {} claims that true is not valid", solver.name())),
            Err(e) => Err(format!("solver {} is not usable: {e}", solver.name())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Strategy {
    Phi1,
    Phi2,
    Phi3,
    Auto,
}

#[derive(Subcommand)]
enum Command {
    /// Report HS and TS violations.
    Check {
        /// Input file, or "-" for standard input.
        file: PathBuf,
        /// Print a JSON array of violations with their repair options.
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Repair violations in batch or interactively.
    Amend {
        /// Input file, or "-" for standard input.
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Strategy::Auto)]
        strategy: Strategy,
        /// Pick repairs one at a time at a terminal prompt.
        #[arg(long)]
        interactive: bool,
        /// Write the amended assertion here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print a JSON report.
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Serve the JSON API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Directory for session snapshots written on shutdown.
        #[arg(long)]
        snapshot_dir: Option<PathBuf>,
        /// Browser origin allowed to call the API; repeatable.
        #[arg(long = "cors-origin")]
        cors_origins: Vec<String>,
        #[command(flatten)]
        solver: SolverArgs,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { CLEAN });
        }
    };
    let code = match cli.command {
        Command::Check { file, json, solver } => check::run(&file, json, &solver),
        Command::Amend { file, strategy, interactive, out, json, solver } => {
            amend::run(&file, strategy, interactive, out.as_deref(), json, &solver)
        }
        Command::Serve { port, host, snapshot_dir, cors_origins, solver } => {
            serve::run(&host, port, snapshot_dir, cors_origins, &solver)
        }
    };
    ExitCode::from(code)
}
