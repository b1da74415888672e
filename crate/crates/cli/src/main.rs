//! `flowlab`: run the library's experiments from the command line.
//!
//! Every subcommand writes one JSON report that embeds the resolved
//! configuration. Exit status is 0 on success, 2 on invalid input, 3 when a
//! run fails numerically (blow-up, or a required property that did not
//! hold) and 1 on I/O errors.

// `!(a < b)` on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;

use commands::algebra::{BracketArgs, ClosureArgs, RankArgs};
use commands::counterexamples::CounterexampleArgs;
use commands::dynamics::{FlowArgs, GronwallArgs, MonotoneArgs};
use commands::learning::{LpArgs, TrainArgs};
use config::{GlobalArgs, Outcome, Resolved};
use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "flowlab", version, about = "Controllability, interpolation and approximation experiments for flows of vector fields")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Lie bracket [f, g] = Dg f - Df g of two polynomial fields
    Bracket(BracketArgs),
    /// Capped Lie closure of a set of generator fields
    Closure(ClosureArgs),
    /// Rank of the lifted family on a point ensemble
    Rank(RankArgs),
    /// Integrate one point through a piecewise-constant schedule
    Flow(FlowArgs),
    /// Fit a schedule to a dataset with Adam
    Train(TrainArgs),
    /// L^p distance between a flow map and a target function
    Lp(LpArgs),
    /// Composite runs for the two separating examples
    Counterexamples(CounterexampleArgs),
    /// Check the growth and Lipschitz Gronwall bounds along a trajectory
    Gronwall(GronwallArgs),
    /// Check that a one-dimensional flow preserves order
    Monotone1d(MonotoneArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Bracket(_) => "bracket",
            Command::Closure(_) => "closure",
            Command::Rank(_) => "rank",
            Command::Flow(_) => "flow",
            Command::Train(_) => "train",
            Command::Lp(_) => "lp",
            Command::Counterexamples(_) => "counterexamples",
            Command::Gronwall(_) => "gronwall",
            Command::Monotone1d(_) => "monotone1d",
        }
    }
}

fn setup<S: DeserializeOwned + Default>(global: &GlobalArgs) -> Result<Resolved<S>, CliError> {
    let cfg: Resolved<S> = config::resolve(global)?;
    let level: log::LevelFilter = cfg.log_level.parse().expect("validated log level");
    env_logger::Builder::new().filter_level(level).format_timestamp(None).try_init().ok();
    if let Some(n) = global.threads {
        if n == 0 {
            return Err(CliError::validation("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::validation(format!("thread pool: {e}")))?;
    }
    Ok(cfg)
}

fn dispatch(cli: &Cli) -> Result<Outcome, CliError> {
    let g = &cli.global;
    match &cli.command {
        Command::Bracket(a) => commands::algebra::bracket(a, setup(g)?),
        Command::Closure(a) => commands::algebra::closure(a, setup(g)?),
        Command::Rank(a) => commands::algebra::rank(a, setup(g)?),
        Command::Flow(a) => commands::dynamics::flow(a, setup(g)?),
        Command::Train(a) => commands::learning::train(a, setup(g)?),
        Command::Lp(a) => commands::learning::lp(a, setup(g)?),
        Command::Counterexamples(a) => commands::counterexamples::counterexamples(a, setup(g)?),
        Command::Gronwall(a) => commands::dynamics::gronwall(a, setup(g)?),
        Command::Monotone1d(a) => commands::dynamics::monotone1d(a, setup(g)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = cli.command.name();
    let outcome = dispatch(&cli).and_then(|out| {
        let output = out_path(&cli, &out);
        config::emit(name, &out, output.as_deref(), !cli.global.no_timestamp)?;
        Ok(out)
    });
    match outcome {
        Ok(out) => match out.failure {
            None => ExitCode::SUCCESS,
            Some(msg) => {
                eprintln!("error: {name}: {msg}");
                ExitCode::from(error::EXIT_NUMERICAL)
            }
        },
        Err(e) => {
            eprintln!("error: {name}: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// The resolved output path, as recorded in the embedded config.
fn out_path(cli: &Cli, out: &Outcome) -> Option<std::path::PathBuf> {
    out.config
        .get("output_path")
        .and_then(|v| v.as_str())
        .map(std::path::PathBuf::from)
        .or_else(|| cli.global.output.clone())
}
