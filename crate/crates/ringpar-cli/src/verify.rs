use std::process::ExitCode;

use clap::Args;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ringpar::{
    ps_volume, ring_volume_per_worker, run_once, ClusterConfig, GradientBuffer, LinkProfile,
    ReduceOp, Strategy,
};

use crate::{make_transport, CliResult, StrategyArg, TransportArg};

#[derive(Args)]
pub(crate) struct VerifyArgs {
    /// Worker count N
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..=512))]
    pub workers: u64,

    /// Gradient length K in elements
    #[arg(long, default_value_t = 1000)]
    pub grad_size: u64,

    #[arg(long, value_enum, default_value_t = StrategyArg::Ring)]
    pub strategy: StrategyArg,

    #[arg(long, value_enum, default_value_t = TransportArg::Inproc)]
    pub transport: TransportArg,

    /// Seed for the random input buffers
    #[arg(long, default_value_t = 42)]
    pub seed: u64,

    #[arg(long, value_enum, default_value_t = ReduceOpArg::Sum)]
    pub reduce_op: ReduceOpArg,

    /// First TCP port for loopback runs (0 = ephemeral)
    #[arg(long, env = "RINGPAR_PORT_BASE", default_value_t = 0)]
    pub port_base: u16,

    /// JSON topology file: a list of "host:port", one per rank (ring) or the
    /// server address first (ps)
    #[arg(long)]
    pub topology: Option<std::path::PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub(crate) enum ReduceOpArg {
    Sum,
    Mean,
}

const ORACLE_TOLERANCE: f64 = 1e-12;

pub(crate) fn run(args: &VerifyArgs) -> CliResult {
    let n = args.workers as usize;
    let k = args.grad_size as usize;
    let reduce_op = match args.reduce_op {
        ReduceOpArg::Sum => ReduceOp::Sum,
        ReduceOpArg::Mean => ReduceOp::Mean,
    };
    let config = ClusterConfig::new(n, args.strategy.to_strategy(), reduce_op)?;
    let transport = make_transport(
        args.transport,
        args.strategy,
        n,
        args.port_base,
        args.topology.as_deref(),
    )?;

    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let inputs: Vec<GradientBuffer> = (0..n)
        .map(|_| GradientBuffer::new((0..k).map(|_| rng.gen_range(-1.0..1.0)).collect()))
        .collect();

    let mut expected = vec![0.0f64; k];
    for input in &inputs {
        for (dst, src) in expected.iter_mut().zip(input.values()) {
            *dst += *src;
        }
    }
    if reduce_op == ReduceOp::Mean {
        for v in &mut expected {
            *v /= n as f64;
        }
    }

    let outcome = run_once(&inputs, &config, &transport, LinkProfile::ZERO)?;

    println!(
        "verify: strategy={} workers={n} grad-size={k} transport={:?} seed={}",
        args.strategy, args.transport, args.seed
    );

    let mut failures: Vec<String> = Vec::new();

    // Oracle check: every worker must match the direct reduction.
    let mut max_rel = 0.0f64;
    for (rank, out) in outcome.outputs.iter().enumerate() {
        for (i, (got, want)) in out.values().iter().zip(&expected).enumerate() {
            let rel = (got - want).abs() / want.abs().max(f64::MIN_POSITIVE);
            max_rel = max_rel.max(rel);
            if rel >= ORACLE_TOLERANCE {
                failures.push(format!(
                    "rank {rank} element {i}: got {got}, oracle {want} (rel err {rel:.3e})"
                ));
            }
        }
    }
    println!("oracle check: max relative error {max_rel:.3e} (tolerance {ORACLE_TOLERANCE:.0e})");

    // Identity check: one reduction, broadcast bit for bit.
    let first: Vec<u64> = outcome.outputs[0]
        .values()
        .iter()
        .map(|v| v.to_bits())
        .collect();
    for (rank, out) in outcome.outputs.iter().enumerate().skip(1) {
        let bits: Vec<u64> = out.values().iter().map(|v| v.to_bits()).collect();
        if bits != first {
            failures.push(format!("rank {rank} output differs bitwise from rank 0"));
        }
    }
    println!("identity check: outputs bitwise identical across workers");

    // Volume check: ledgers against the closed-form predictors.
    match config.strategy {
        Strategy::Ring => {
            let predicted = ring_volume_per_worker(k, n)?;
            for (rank, ledger) in outcome.worker_ledgers.iter().enumerate() {
                if ledger.elements_sent != predicted[rank] {
                    failures.push(format!(
                        "rank {rank} sent {} elements, predictor says {}",
                        ledger.elements_sent, predicted[rank]
                    ));
                }
            }
            if predicted.windows(2).all(|w| w[0] == w[1]) {
                println!("volume check: {} elements sent per worker", predicted[0]);
            } else {
                println!("volume check: elements sent per worker {predicted:?}");
            }
        }
        Strategy::ParameterServer => {
            let (uplink, downlink) = ps_volume(k, n)?;
            let server = outcome.server_ledger.as_ref().expect("ps run has a server");
            if server.elements_received != uplink {
                failures.push(format!(
                    "server received {} elements, predictor says {uplink}",
                    server.elements_received
                ));
            }
            if server.elements_sent != downlink {
                failures.push(format!(
                    "server sent {} elements, predictor says {downlink}",
                    server.elements_sent
                ));
            }
            println!("volume check: server uplink {uplink} elements, downlink {downlink}");
        }
    }

    if failures.is_empty() {
        println!("PASS");
        Ok(ExitCode::SUCCESS)
    } else {
        println!("FAIL ({} finding(s)):", failures.len());
        for (i, failure) in failures.iter().enumerate() {
            if i >= 20 {
                println!("  ... and {} more", failures.len() - i);
                break;
            }
            println!("  {failure}");
        }
        Ok(ExitCode::FAILURE)
    }
}
