use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use clap::Args;

use ringpar::trainer::{train, LeastSquaresTask, TaskSpec, TrainSettings};
use ringpar::{ClusterConfig, LinkProfile};

use crate::{make_transport, CliResult, StrategyArg, TransportArg};

#[derive(Args)]
pub(crate) struct BenchArgs {
    #[arg(long, value_enum, default_value_t = StrategyArg::Ring)]
    pub strategy: StrategyArg,

    /// Worker counts to benchmark; an n=1 row records the t0 baseline
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "1,2,3,4,5,6,7,8",
        value_parser = clap::value_parser!(u64).range(1..=512)
    )]
    pub workers_list: Vec<u64>,

    /// Synchronous SGD steps per run
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub steps: u64,

    /// Task sample count S
    #[arg(long, default_value_t = 256)]
    pub samples: u64,

    /// Task dimension D (the gradient length K)
    #[arg(long, default_value_t = 64)]
    pub dims: u64,

    /// Target noise scale
    #[arg(long, default_value_t = 0.01)]
    pub noise: f64,

    /// Seed behind all randomness in the run
    #[arg(long, default_value_t = 42)]
    pub seed: u64,

    /// JSON task spec {"samples":..,"dims":..,"noise":..,"seed":..};
    /// overrides the individual task flags
    #[arg(long)]
    pub task_config: Option<std::path::PathBuf>,

    /// Step size; defaults to a rate guaranteed stable for the task
    #[arg(long)]
    pub lr: Option<f64>,

    /// Artificial seconds of compute per step at one worker
    #[arg(long, default_value_t = 0.0)]
    pub compute_delay: f64,

    /// Simulated seconds per frame
    #[arg(long, default_value_t = 0.0)]
    pub per_message_delay: f64,

    /// Simulated seconds per wire byte
    #[arg(long, default_value_t = 0.0)]
    pub per_byte_delay: f64,

    #[arg(long, value_enum, default_value_t = TransportArg::Inproc)]
    pub transport: TransportArg,

    /// First TCP port for loopback runs (0 = ephemeral)
    #[arg(long, env = "RINGPAR_PORT_BASE", default_value_t = 0)]
    pub port_base: u16,

    /// JSON topology file for TCP runs
    #[arg(long)]
    pub topology: Option<std::path::PathBuf>,

    /// Output CSV path
    #[arg(long)]
    pub out: std::path::PathBuf,

    /// Optional CSV of per-step timings (columns n,step,t1,t2,t3,t_total)
    #[arg(long)]
    pub steps_out: Option<std::path::PathBuf>,
}

pub(crate) fn run(args: &BenchArgs) -> CliResult {
    let spec = match &args.task_config {
        Some(path) => {
            let json = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            serde_json::from_str::<TaskSpec>(&json)
                .map_err(|e| format!("task config {}: {e}", path.display()))?
        }
        None => TaskSpec {
            samples: args.samples as usize,
            dims: args.dims as usize,
            noise: args.noise,
            seed: args.seed,
        },
    };
    let task = LeastSquaresTask::generate(&spec)?;
    let learning_rate = args.lr.unwrap_or_else(|| task.suggested_learning_rate());
    let profile = LinkProfile::new(args.per_message_delay, args.per_byte_delay)?;

    let mut rows = Vec::with_capacity(args.workers_list.len());
    let mut step_rows: Vec<(u64, usize, f64, f64, f64, f64)> = Vec::new();
    for &workers in &args.workers_list {
        let n = workers as usize;
        let config = ClusterConfig::new(n, args.strategy.to_strategy(), ringpar::ReduceOp::Sum)?;
        let mut settings = TrainSettings::new(args.steps as usize, learning_rate);
        settings.profile = profile;
        settings.compute_delay = args.compute_delay;
        settings.transport = make_transport(
            args.transport,
            args.strategy,
            n,
            args.port_base,
            args.topology.as_deref(),
        )?;

        let started = Instant::now();
        let outcome = train(&task, &config, &settings)?;
        let wall = started.elapsed().as_secs_f64();

        let t1: f64 = outcome.step_timings.iter().map(|t| t.t1_compute).sum();
        let t2: f64 = outcome
            .step_timings
            .iter()
            .map(|t| t.t2_communication)
            .sum();
        let t3 = (wall - t1 - t2).max(0.0);
        let elements_sent: u64 = outcome.worker_ledgers.iter().map(|l| l.elements_sent).sum();
        eprintln!(
            "bench: {} n={n} done in {wall:.6}s (t1={t1:.6} t2={t2:.6} t3={t3:.6}, \
             {elements_sent} elements sent)",
            args.strategy
        );
        rows.push((workers, wall, t1, t2, t3, elements_sent));
        if args.steps_out.is_some() {
            for (step, timing) in outcome.step_timings.iter().enumerate() {
                step_rows.push((
                    workers,
                    step,
                    timing.t1_compute,
                    timing.t2_communication,
                    timing.t3_overhead,
                    timing.t_total,
                ));
            }
        }
    }

    let mut file = std::fs::File::create(&args.out)
        .map_err(|e| format!("cannot write {}: {e}", args.out.display()))?;
    writeln!(file, "n,t_seconds,t1,t2,t3,elements_sent")?;
    for (n, t, t1, t2, t3, elements) in &rows {
        writeln!(file, "{n},{t},{t1},{t2},{t3},{elements}")?;
    }
    println!("wrote {} ({} rows)", args.out.display(), rows.len());

    if let Some(path) = &args.steps_out {
        let mut file = std::fs::File::create(path)
            .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
        writeln!(file, "n,step,t1,t2,t3,t_total")?;
        for (n, step, t1, t2, t3, total) in &step_rows {
            writeln!(file, "{n},{step},{t1},{t2},{t3},{total}")?;
        }
        println!("wrote {} ({} rows)", path.display(), step_rows.len());
    }
    Ok(ExitCode::SUCCESS)
}
