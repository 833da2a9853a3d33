mod bench;
mod models;
mod verify;

use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ringpar::{Strategy, Topology, TransportChoice};

pub(crate) type CliResult = Result<ExitCode, Box<dyn std::error::Error>>;

#[derive(Parser)]
#[command(
    name = "ringpar",
    version,
    about = "Ring and parameter-server gradient synchronization: verification, benchmarks, and cost models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one collective on seeded random buffers and check it against the
    /// direct-sum oracle and the volume predictors
    Verify(verify::VerifyArgs),
    /// Run training benchmarks over a list of worker counts and write a
    /// timing CSV
    Bench(bench::BenchArgs),
    /// Fit a cost model to a timing CSV and write it as JSON
    Fit(models::FitArgs),
    /// Evaluate a fitted cost model at a worker count
    Predict(models::PredictArgs),
    /// Smallest worker count where the ring model beats the server model
    Crossover(models::CrossoverArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub(crate) enum StrategyArg {
    Ring,
    Ps,
}

impl StrategyArg {
    pub(crate) fn to_strategy(self) -> Strategy {
        match self {
            StrategyArg::Ring => Strategy::Ring,
            StrategyArg::Ps => Strategy::ParameterServer,
        }
    }
}

impl std::fmt::Display for StrategyArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StrategyArg::Ring => write!(f, "ring"),
            StrategyArg::Ps => write!(f, "ps"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub(crate) enum TransportArg {
    Inproc,
    Tcp,
}

/// Builds the transport for one run. TCP reads addresses from `--topology`
/// when given, otherwise uses loopback at `--port-base` (0 = ephemeral
/// ports, which never collide).
pub(crate) fn make_transport(
    transport: TransportArg,
    strategy: StrategyArg,
    workers: usize,
    port_base: u16,
    topology_path: Option<&std::path::Path>,
) -> Result<TransportChoice, Box<dyn std::error::Error>> {
    match transport {
        TransportArg::Inproc => Ok(TransportChoice::InProcess),
        TransportArg::Tcp => {
            let topology = match topology_path {
                Some(path) => {
                    let json = std::fs::read_to_string(path)
                        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
                    Topology::from_json(&json)?
                }
                None => match strategy {
                    // Every rank listens in a ring; only the server listens
                    // in a star.
                    StrategyArg::Ring => Topology::localhost(workers, port_base),
                    StrategyArg::Ps => Topology::localhost(1, port_base),
                },
            };
            Ok(TransportChoice::Tcp(topology))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Verify(args) => verify::run(&args),
        Command::Bench(args) => bench::run(&args),
        Command::Fit(args) => models::fit(&args),
        Command::Predict(args) => models::predict(&args),
        Command::Crossover(args) => models::crossover(&args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            let mut source = err.source();
            while let Some(cause) = source {
                eprintln!("  caused by: {cause}");
                source = cause.source();
            }
            ExitCode::FAILURE
        }
    }
}
