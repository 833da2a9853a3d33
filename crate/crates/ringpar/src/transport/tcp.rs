//! TCP transport: the same endpoints as the in-process transport, carried
//! over sockets.
//!
//! All listeners are bound before any connection is dialed, so a whole
//! topology can be brought up from one thread without races. Port 0 asks the
//! OS for an ephemeral port, which keeps parallel test runs from colliding.

use std::io::{BufReader, Write};
use std::net::{TcpListener, TcpStream};

use serde::{Deserialize, Serialize};

use crate::cluster::{ClusterConfig, WorkerId};
use crate::error::{Error, Result};
use crate::transport::frame::{Frame, MsgType};
use crate::transport::link::LinkProfile;
use crate::transport::{FrameRx, FrameTx, RingEndpoint, StarServerEndpoint, StarWorkerEndpoint};

/// Addresses for a TCP run, one `host:port` entry per rank.
///
/// Ring mode uses entry `r` as rank `r`'s listen address. Star mode uses
/// entry 0 as the server's listen address; workers only dial, so they need no
/// entries of their own.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Topology {
    addrs: Vec<String>,
}

impl Topology {
    pub fn new(addrs: Vec<String>) -> Result<Self> {
        if addrs.is_empty() {
            return Err(Error::invalid("topology needs at least one address"));
        }
        Ok(Topology { addrs })
    }

    /// Loopback addresses at consecutive ports; `port_base` 0 means every
    /// rank gets an OS-assigned ephemeral port.
    pub fn localhost(count: usize, port_base: u16) -> Self {
        let addrs = (0..count)
            .map(|i| {
                let port = if port_base == 0 {
                    0
                } else {
                    port_base + i as u16
                };
                format!("127.0.0.1:{port}")
            })
            .collect();
        Topology { addrs }
    }

    /// Parses a JSON list of `"host:port"` strings.
    pub fn from_json(json: &str) -> Result<Self> {
        let addrs: Vec<String> = serde_json::from_str(json).map_err(|e| Error::Parse {
            line: e.line(),
            message: format!("topology file: {e}"),
        })?;
        Topology::new(addrs)
    }

    pub fn len(&self) -> usize {
        self.addrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.addrs.is_empty()
    }

    pub fn addr(&self, rank: usize) -> &str {
        &self.addrs[rank]
    }
}

struct TcpTx {
    stream: TcpStream,
}

impl FrameTx for TcpTx {
    fn send(&mut self, frame: &Frame) -> Result<()> {
        self.stream.write_all(&frame.encode())?;
        self.stream.flush()?;
        Ok(())
    }
}

struct TcpRx {
    reader: BufReader<TcpStream>,
    profile: LinkProfile,
}

impl FrameRx for TcpRx {
    fn recv(&mut self) -> Result<Frame> {
        let frame = Frame::read_from(&mut self.reader)?;
        self.profile.apply(frame.wire_len());
        Ok(frame)
    }
}

fn setup_err(rank: usize, source: std::io::Error) -> Error {
    Error::TransportSetup { rank, source }
}

fn bind(addr: &str, rank: usize) -> Result<TcpListener> {
    TcpListener::bind(addr).map_err(|e| setup_err(rank, e))
}

fn dial(addr: &str, rank: usize) -> Result<TcpStream> {
    let stream = TcpStream::connect(addr).map_err(|e| setup_err(rank, e))?;
    stream.set_nodelay(true).map_err(|e| setup_err(rank, e))?;
    Ok(stream)
}

fn send_hello(stream: &mut TcpStream, rank: usize) -> Result<()> {
    stream.write_all(&Frame::hello(rank).encode())?;
    stream.flush()?;
    Ok(())
}

fn read_hello(stream: &mut TcpStream) -> Result<usize> {
    let frame = Frame::read_from(stream)?;
    if frame.msg_type != MsgType::Hello {
        return Err(Error::protocol(format!(
            "expected hello during setup, got {:?}",
            frame.msg_type
        )));
    }
    Ok(frame.block_index as usize)
}

/// Brings up a TCP ring on `topology`, which must hold one address per rank.
///
/// Every rank listens at its own address and dials its right neighbor; a
/// `Hello` handshake verifies that the inbound connection really is the left
/// neighbor before any endpoint is handed out.
pub fn connect_ring_tcp(
    config: &ClusterConfig,
    topology: &Topology,
    profile: LinkProfile,
) -> Result<Vec<RingEndpoint>> {
    let n = config.worker_count;
    if n == 0 {
        return Err(Error::invalid("worker_count must be at least 1"));
    }
    if topology.len() != n {
        return Err(Error::invalid(format!(
            "topology has {} addresses for {n} workers",
            topology.len()
        )));
    }
    if n == 1 {
        return Ok(vec![RingEndpoint::solo(WorkerId::new(0))]);
    }

    let mut listeners = Vec::with_capacity(n);
    let mut actual_addrs = Vec::with_capacity(n);
    for rank in 0..n {
        let listener = bind(topology.addr(rank), rank)?;
        actual_addrs.push(listener.local_addr().map_err(|e| setup_err(rank, e))?);
        listeners.push(listener);
    }

    let mut outbound = Vec::with_capacity(n);
    for rank in 0..n {
        let right = (rank + 1) % n;
        let mut stream = dial(&actual_addrs[right].to_string(), rank)?;
        send_hello(&mut stream, rank)?;
        outbound.push(stream);
    }

    let mut inbound: Vec<Option<TcpStream>> = (0..n).map(|_| None).collect();
    for (rank, listener) in listeners.iter().enumerate() {
        let (mut stream, _) = listener.accept().map_err(|e| setup_err(rank, e))?;
        stream.set_nodelay(true).map_err(|e| setup_err(rank, e))?;
        let peer = read_hello(&mut stream)?;
        let left = (rank + n - 1) % n;
        if peer != left {
            return Err(Error::protocol(format!(
                "rank {rank} expected hello from rank {left}, got rank {peer}"
            )));
        }
        inbound[rank] = Some(stream);
    }

    let mut endpoints = Vec::with_capacity(n);
    for (rank, (out, input)) in outbound.into_iter().zip(inbound).enumerate() {
        let input = input.expect("every rank accepted one inbound link");
        endpoints.push(RingEndpoint::new(
            WorkerId::new(rank),
            n,
            Box::new(TcpTx { stream: out }),
            Box::new(TcpRx {
                reader: BufReader::new(input),
                profile,
            }),
        ));
    }
    Ok(endpoints)
}

/// Brings up a TCP star: the server listens at `topology` entry 0 and every
/// worker dials it, identifying itself with a `Hello` frame.
pub fn connect_star_tcp(
    config: &ClusterConfig,
    topology: &Topology,
    profile: LinkProfile,
) -> Result<(StarServerEndpoint, Vec<StarWorkerEndpoint>)> {
    let n = config.worker_count;
    if n == 0 {
        return Err(Error::invalid("worker_count must be at least 1"));
    }
    // The server is not a rank; setup errors at the server use index n.
    let listener = bind(topology.addr(0), n)?;
    let server_addr = listener.local_addr().map_err(|e| setup_err(n, e))?;

    let mut worker_streams = Vec::with_capacity(n);
    for rank in 0..n {
        let mut stream = dial(&server_addr.to_string(), rank)?;
        send_hello(&mut stream, rank)?;
        worker_streams.push(stream);
    }

    let mut accepted: Vec<Option<TcpStream>> = (0..n).map(|_| None).collect();
    for _ in 0..n {
        let (mut stream, _) = listener.accept().map_err(|e| setup_err(n, e))?;
        stream.set_nodelay(true).map_err(|e| setup_err(n, e))?;
        let rank = read_hello(&mut stream)?;
        if rank >= n {
            return Err(Error::protocol(format!(
                "hello from rank {rank}, but only {n} workers expected"
            )));
        }
        if accepted[rank].is_some() {
            return Err(Error::protocol(format!("duplicate hello from rank {rank}")));
        }
        accepted[rank] = Some(stream);
    }

    let mut server_links: Vec<(Box<dyn FrameTx>, Box<dyn FrameRx>)> = Vec::with_capacity(n);
    for slot in accepted {
        let stream = slot.expect("all ranks answered");
        let tx = stream.try_clone().map_err(|e| setup_err(n, e))?;
        server_links.push((
            Box::new(TcpTx { stream: tx }),
            Box::new(TcpRx {
                reader: BufReader::new(stream),
                profile,
            }),
        ));
    }

    let mut workers = Vec::with_capacity(n);
    for (rank, stream) in worker_streams.into_iter().enumerate() {
        let tx = stream.try_clone().map_err(|e| setup_err(rank, e))?;
        workers.push(StarWorkerEndpoint::new(
            WorkerId::new(rank),
            Box::new(TcpTx { stream: tx }),
            Box::new(TcpRx {
                reader: BufReader::new(stream),
                profile,
            }),
        ));
    }
    Ok((StarServerEndpoint::new(server_links), workers))
}
