//! The two synchronization strategies: ring all-reduce and parameter-server
//! aggregation, plus closed-form communication-volume predictors.
//!
//! Both collectives give every worker the elementwise sum (or mean) of all
//! worker buffers. They differ in how the data moves:
//!
//! * the ring runs `N - 1` scatter-reduce rounds (received blocks are added)
//!   followed by `N - 1` all-gather rounds (received blocks replace), sending
//!   exactly `2(N - 1)` frames per worker;
//! * the parameter server receives every worker's full buffer, accumulates
//!   in ascending rank order, and broadcasts one result back.
//!
//! Ring outputs are bitwise identical across workers: each block is reduced
//! in a single fixed ring order and then copied verbatim. Ring and PS outputs
//! agree only up to accumulation order, so cross-strategy comparisons use a
//! relative tolerance.

use crate::buffer::GradientBuffer;
use crate::cluster::{ClusterConfig, ReduceOp, Strategy, WorkerId};
use crate::error::{Error, Result};
use crate::partition::{partition, BlockPartition};
use crate::schedule::{gather_schedule, scatter_schedule, BlockExchange};
use crate::transport::{
    CommLedger, Frame, LinkProfile, MsgType, RingEndpoint, StarServerEndpoint, StarWorkerEndpoint,
    TransportChoice,
};

/// Round labels must fit the frame's 16-bit round field across both phases.
const MAX_RING_WORKERS: usize = 32768;

fn check_world(config: &ClusterConfig, endpoint_world: usize) -> Result<()> {
    if config.worker_count != endpoint_world {
        return Err(Error::invalid(format!(
            "config says {} workers but endpoint belongs to a world of {endpoint_world}",
            config.worker_count
        )));
    }
    Ok(())
}

fn expect_grad_block(frame: &Frame, round: u16, block: usize, expected_len: usize) -> Result<()> {
    if frame.msg_type != MsgType::GradBlock {
        return Err(Error::protocol(format!(
            "expected gradient block, got {:?}",
            frame.msg_type
        )));
    }
    if frame.round != round {
        return Err(Error::protocol(format!(
            "round skew: expected {round}, got {}",
            frame.round
        )));
    }
    if frame.block_index as usize != block {
        return Err(Error::protocol(format!(
            "block skew: expected block {block}, got {}",
            frame.block_index
        )));
    }
    if frame.payload.len() != expected_len {
        return Err(Error::protocol(format!(
            "block {block} size mismatch: expected {expected_len} elements, got {} \
             (differing gradient sizes across workers?)",
            frame.payload.len()
        )));
    }
    Ok(())
}

/// Ring all-reduce: every worker calls this concurrently with a buffer of the
/// same length and gets back the elementwise reduction of all `N` buffers.
///
/// `N - 1` scatter-reduce rounds add received blocks into the local buffer,
/// then `N - 1` all-gather rounds replace local blocks with the fully reduced
/// ones. A single worker is the identity and sends nothing.
pub fn ring_allreduce(
    local: &GradientBuffer,
    config: &ClusterConfig,
    endpoint: &mut RingEndpoint,
) -> Result<GradientBuffer> {
    check_world(config, endpoint.world_size())?;
    local.ensure_finite()?;
    let n = config.worker_count;
    if n == 1 {
        return Ok(local.clone());
    }
    if n > MAX_RING_WORKERS {
        return Err(Error::invalid(format!(
            "worker_count {n} exceeds the wire round counter limit {MAX_RING_WORKERS}"
        )));
    }

    let rank = endpoint.rank();
    let part = partition(local.len(), n)?;
    let mut values = local.values().to_vec();

    for round in 0..n - 1 {
        let BlockExchange {
            send_block,
            recv_block,
        } = scatter_schedule(rank, n, round)?;
        let wire_round = round as u16;
        let frame = Frame::grad_block(
            wire_round,
            send_block as u32,
            &values[part.block_range(send_block)],
        );
        endpoint.send_frame(&frame)?;

        let incoming = endpoint.recv_frame()?;
        expect_grad_block(
            &incoming,
            wire_round,
            recv_block,
            part.block_len(recv_block),
        )?;
        for (dst, src) in values[part.block_range(recv_block)]
            .iter_mut()
            .zip(&incoming.payload)
        {
            *dst += *src;
        }
    }

    for round in 0..n - 1 {
        let BlockExchange {
            send_block,
            recv_block,
        } = gather_schedule(rank, n, round)?;
        let wire_round = (n - 1 + round) as u16;
        let frame = Frame::grad_block(
            wire_round,
            send_block as u32,
            &values[part.block_range(send_block)],
        );
        endpoint.send_frame(&frame)?;

        let incoming = endpoint.recv_frame()?;
        expect_grad_block(
            &incoming,
            wire_round,
            recv_block,
            part.block_len(recv_block),
        )?;
        values[part.block_range(recv_block)].copy_from_slice(&incoming.payload);
    }

    if config.reduce_op == ReduceOp::Mean {
        let scale = n as f64;
        for v in &mut values {
            *v /= scale;
        }
    }
    Ok(GradientBuffer::new(values))
}

/// Worker half of parameter-server aggregation: pushes the local buffer to
/// the server and blocks until the reduced buffer comes back.
///
/// Call [`StarWorkerEndpoint::send_done`] once the session is over so the
/// server loop can exit.
pub fn ps_allreduce(
    local: &GradientBuffer,
    _config: &ClusterConfig,
    endpoint: &mut StarWorkerEndpoint,
) -> Result<GradientBuffer> {
    // Workers need neither N nor the reduce op; the server owns both.
    local.ensure_finite()?;
    endpoint.send_frame(&Frame::grad_block(0, 0, local.values()))?;
    let reply = endpoint.recv_frame()?;
    if reply.msg_type != MsgType::GradBlock {
        return Err(Error::protocol(format!(
            "expected reduced buffer from server, got {:?}",
            reply.msg_type
        )));
    }
    if reply.payload.len() != local.len() {
        return Err(Error::protocol(format!(
            "server returned {} elements for a {}-element gradient",
            reply.payload.len(),
            local.len()
        )));
    }
    Ok(GradientBuffer::new(reply.payload))
}

/// Server half of parameter-server aggregation.
///
/// Each round receives one buffer per worker in ascending rank order,
/// accumulates, and broadcasts the reduction back to everyone. The loop runs
/// until every worker has sent [`Frame::done`]; the number of completed
/// rounds is returned.
pub fn serve_parameter_server(
    endpoint: &mut StarServerEndpoint,
    config: &ClusterConfig,
) -> Result<u64> {
    check_world(config, endpoint.worker_count())?;
    let n = endpoint.worker_count();
    let mut rounds: u64 = 0;
    loop {
        let first = endpoint.recv_from(0)?;
        match first.msg_type {
            MsgType::Done => {
                for rank in 1..n {
                    let frame = endpoint.recv_from(rank)?;
                    if frame.msg_type != MsgType::Done {
                        return Err(Error::protocol(format!(
                            "rank 0 finished but rank {rank} sent {:?}",
                            frame.msg_type
                        )));
                    }
                }
                return Ok(rounds);
            }
            MsgType::GradBlock => {
                let mut acc = first.payload;
                for rank in 1..n {
                    let frame = endpoint.recv_from(rank)?;
                    if frame.msg_type != MsgType::GradBlock {
                        return Err(Error::protocol(format!(
                            "expected gradient from rank {rank}, got {:?}",
                            frame.msg_type
                        )));
                    }
                    if frame.payload.len() != acc.len() {
                        return Err(Error::protocol(format!(
                            "rank {rank} sent {} elements but rank 0 sent {} \
                             (differing gradient sizes across workers?)",
                            frame.payload.len(),
                            acc.len()
                        )));
                    }
                    for (dst, src) in acc.iter_mut().zip(&frame.payload) {
                        *dst += *src;
                    }
                }
                if config.reduce_op == ReduceOp::Mean {
                    let scale = n as f64;
                    for v in &mut acc {
                        *v /= scale;
                    }
                }
                let reply = Frame::grad_block(first.round, 0, &acc);
                for rank in 0..n {
                    endpoint.send_to(rank, &reply)?;
                }
                rounds += 1;
            }
            MsgType::Hello => {
                return Err(Error::protocol("unexpected hello after setup".to_string()));
            }
        }
    }
}

/// Elements each worker sends during one ring all-reduce of `k` elements
/// across `n` workers: the sum of its `2(n - 1)` scheduled block sizes.
///
/// Equals `2k(n - 1) / n` exactly when `n` divides `k`; with uneven blocks
/// the totals differ across ranks by at most two elements.
pub fn ring_volume_per_worker(k: usize, n: usize) -> Result<Vec<u64>> {
    if n == 0 {
        return Err(Error::invalid("worker count must be at least 1"));
    }
    if n == 1 {
        return Ok(vec![0]);
    }
    let part = partition(k, n)?;
    let mut totals = vec![0u64; n];
    for (rank, total) in totals.iter_mut().enumerate() {
        let id = WorkerId::new(rank);
        for round in 0..n - 1 {
            *total += part.block_len(scatter_schedule(id, n, round)?.send_block) as u64;
            *total += part.block_len(gather_schedule(id, n, round)?.send_block) as u64;
        }
    }
    Ok(totals)
}

/// Traffic at the parameter server for one aggregation of `k` elements from
/// `n` workers: `(uplink, downlink)`, both `n * k` elements.
pub fn ps_volume(k: usize, n: usize) -> Result<(u64, u64)> {
    if n == 0 {
        return Err(Error::invalid("worker count must be at least 1"));
    }
    let volume = (n as u64) * (k as u64);
    Ok((volume, volume))
}

/// Convenience used by docs and reports: the partition a ring all-reduce of
/// `k` elements over `n` workers would use.
pub fn ring_partition(k: usize, n: usize) -> Result<BlockPartition> {
    partition(k, n)
}

/// Everything one orchestrated collective produces.
#[derive(Clone, Debug)]
pub struct CollectiveOutcome {
    /// One reduced buffer per worker, in rank order.
    pub outputs: Vec<GradientBuffer>,
    pub worker_ledgers: Vec<CommLedger>,
    /// Present for parameter-server runs.
    pub server_ledger: Option<CommLedger>,
}

/// Runs one all-reduce with a worker thread per rank (plus a server thread
/// for the parameter-server strategy) and collects every worker's result and
/// ledger. `inputs[r]` is rank `r`'s buffer.
pub fn run_once(
    inputs: &[GradientBuffer],
    config: &ClusterConfig,
    transport: &TransportChoice,
    profile: LinkProfile,
) -> Result<CollectiveOutcome> {
    if inputs.len() != config.worker_count {
        return Err(Error::invalid(format!(
            "{} input buffers for {} workers",
            inputs.len(),
            config.worker_count
        )));
    }
    match config.strategy {
        Strategy::Ring => {
            let endpoints = transport.connect_ring(config, profile)?;
            let results: Vec<Result<(GradientBuffer, CommLedger)>> = std::thread::scope(|scope| {
                let handles: Vec<_> = endpoints
                    .into_iter()
                    .zip(inputs)
                    .map(|(mut ep, input)| {
                        scope.spawn(move || {
                            let out = ring_allreduce(input, config, &mut ep)?;
                            Ok((out, ep.ledger().clone()))
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("worker thread panicked"))
                    .collect()
            });
            let mut outputs = Vec::with_capacity(inputs.len());
            let mut ledgers = Vec::with_capacity(inputs.len());
            for result in results {
                let (out, ledger) = result?;
                outputs.push(out);
                ledgers.push(ledger);
            }
            Ok(CollectiveOutcome {
                outputs,
                worker_ledgers: ledgers,
                server_ledger: None,
            })
        }
        Strategy::ParameterServer => {
            let (mut server, workers) = transport.connect_star(config, profile)?;
            let (results, server_result) = std::thread::scope(|scope| {
                let server_handle = scope.spawn(|| {
                    serve_parameter_server(&mut server, config)?;
                    Ok::<_, Error>(server.ledger().clone())
                });
                let handles: Vec<_> = workers
                    .into_iter()
                    .zip(inputs)
                    .map(|(mut ep, input)| {
                        scope.spawn(move || {
                            let out = ps_allreduce(input, config, &mut ep)?;
                            ep.send_done()?;
                            Ok((out, ep.ledger().clone()))
                        })
                    })
                    .collect();
                let results: Vec<Result<(GradientBuffer, CommLedger)>> = handles
                    .into_iter()
                    .map(|h| h.join().expect("worker thread panicked"))
                    .collect();
                (
                    results,
                    server_handle.join().expect("server thread panicked"),
                )
            });
            let server_ledger = server_result?;
            let mut outputs = Vec::with_capacity(inputs.len());
            let mut ledgers = Vec::with_capacity(inputs.len());
            for result in results {
                let (out, ledger) = result?;
                outputs.push(out);
                ledgers.push(ledger);
            }
            Ok(CollectiveOutcome {
                outputs,
                worker_ledgers: ledgers,
                server_ledger: Some(server_ledger),
            })
        }
    }
}
