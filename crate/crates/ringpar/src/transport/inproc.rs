//! In-process transport: one unbounded channel per unidirectional link.
//!
//! Frames cross the channel in encoded form, so the wire format is exercised
//! end to end and results are bitwise identical to the TCP transport.

use std::sync::mpsc::{channel, Receiver, Sender};

use crate::cluster::{ClusterConfig, WorkerId};
use crate::error::{Error, Result};
use crate::transport::frame::Frame;
use crate::transport::link::LinkProfile;
use crate::transport::{FrameRx, FrameTx, RingEndpoint, StarServerEndpoint, StarWorkerEndpoint};

pub(crate) struct ChannelTx {
    sender: Sender<Vec<u8>>,
}

impl FrameTx for ChannelTx {
    fn send(&mut self, frame: &Frame) -> Result<()> {
        self.sender
            .send(frame.encode())
            .map_err(|_| Error::LinkClosed)
    }
}

pub(crate) struct ChannelRx {
    receiver: Receiver<Vec<u8>>,
    profile: LinkProfile,
}

impl FrameRx for ChannelRx {
    fn recv(&mut self) -> Result<Frame> {
        let bytes = self.receiver.recv().map_err(|_| Error::LinkClosed)?;
        self.profile.apply(bytes.len());
        Frame::decode(&bytes)
    }
}

fn link(profile: LinkProfile) -> (ChannelTx, ChannelRx) {
    let (sender, receiver) = channel();
    (ChannelTx { sender }, ChannelRx { receiver, profile })
}

/// Builds an in-process ring of `N` workers: endpoint `r` sends to
/// `(r + 1) % N` and receives from `(r - 1) mod N` over FIFO lossless links.
pub fn connect_ring(config: &ClusterConfig, profile: LinkProfile) -> Result<Vec<RingEndpoint>> {
    let n = config.worker_count;
    if n == 0 {
        return Err(Error::invalid("worker_count must be at least 1"));
    }
    if n == 1 {
        return Ok(vec![RingEndpoint::solo(WorkerId::new(0))]);
    }
    let mut txs = Vec::with_capacity(n);
    let mut rxs = Vec::with_capacity(n);
    for _ in 0..n {
        let (tx, rx) = link(profile);
        txs.push(Some(tx));
        rxs.push(Some(rx));
    }
    // Link i carries frames from rank i to rank (i + 1) % n.
    let mut endpoints = Vec::with_capacity(n);
    for rank in 0..n {
        let to_right = txs[rank].take().unwrap();
        let from_left = rxs[(rank + n - 1) % n].take().unwrap();
        endpoints.push(RingEndpoint::new(
            WorkerId::new(rank),
            n,
            Box::new(to_right),
            Box::new(from_left),
        ));
    }
    Ok(endpoints)
}

/// Builds an in-process star: every worker holds a bidirectional link to the
/// server endpoint.
pub fn connect_star(
    config: &ClusterConfig,
    profile: LinkProfile,
) -> Result<(StarServerEndpoint, Vec<StarWorkerEndpoint>)> {
    let n = config.worker_count;
    if n == 0 {
        return Err(Error::invalid("worker_count must be at least 1"));
    }
    let mut server_links: Vec<(Box<dyn FrameTx>, Box<dyn FrameRx>)> = Vec::with_capacity(n);
    let mut workers = Vec::with_capacity(n);
    for rank in 0..n {
        let (up_tx, up_rx) = link(profile);
        let (down_tx, down_rx) = link(profile);
        server_links.push((Box::new(down_tx), Box::new(up_rx)));
        workers.push(StarWorkerEndpoint::new(
            WorkerId::new(rank),
            Box::new(up_tx),
            Box::new(down_rx),
        ));
    }
    Ok((StarServerEndpoint::new(server_links), workers))
}
