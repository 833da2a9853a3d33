//! Point-to-point message passing between workers.
//!
//! Two interchangeable transports share one framed wire format: an in-process
//! channel transport for tests and benchmarks, and a TCP transport for running
//! the same collectives over sockets. Either can simulate link cost through a
//! [`LinkProfile`].
//!
//! Endpoints are single-owner: each one is created by a connector, may be
//! moved into a worker thread, and is never shared concurrently. Every
//! endpoint keeps a [`CommLedger`] of the traffic it has moved; setup
//! handshakes (TCP `Hello` frames) happen before endpoints exist and are not
//! counted.

mod frame;
mod inproc;
mod ledger;
mod link;
mod tcp;

pub use frame::{Frame, MsgType, HEADER_LEN, MAGIC, MAX_PAYLOAD_BYTES, VERSION};
pub use inproc::{connect_ring, connect_star};
pub use ledger::CommLedger;
pub use link::LinkProfile;
pub use tcp::{connect_ring_tcp, connect_star_tcp, Topology};

use crate::cluster::{ClusterConfig, WorkerId};
use crate::error::{Error, Result};

/// Sending half of one unidirectional link. Sends are buffered: within the
/// payload sizes this crate is built for, a sender never blocks on a slow
/// receiver.
pub(crate) trait FrameTx: Send {
    fn send(&mut self, frame: &Frame) -> Result<()>;
}

/// Receiving half of one unidirectional link. `recv` blocks until a full
/// frame is available and preserves per-link FIFO order.
pub(crate) trait FrameRx: Send {
    fn recv(&mut self) -> Result<Frame>;
}

/// One worker's seat in a ring: a send port to the right neighbor and a
/// receive port from the left neighbor.
///
/// A single-worker "ring" has no links; the collectives never exchange frames
/// in that case.
pub struct RingEndpoint {
    rank: WorkerId,
    world_size: usize,
    to_right: Option<Box<dyn FrameTx>>,
    from_left: Option<Box<dyn FrameRx>>,
    ledger: CommLedger,
}

impl RingEndpoint {
    pub(crate) fn new(
        rank: WorkerId,
        world_size: usize,
        to_right: Box<dyn FrameTx>,
        from_left: Box<dyn FrameRx>,
    ) -> Self {
        RingEndpoint {
            rank,
            world_size,
            to_right: Some(to_right),
            from_left: Some(from_left),
            ledger: CommLedger::default(),
        }
    }

    pub(crate) fn solo(rank: WorkerId) -> Self {
        RingEndpoint {
            rank,
            world_size: 1,
            to_right: None,
            from_left: None,
            ledger: CommLedger::default(),
        }
    }

    pub fn rank(&self) -> WorkerId {
        self.rank
    }

    pub fn world_size(&self) -> usize {
        self.world_size
    }

    pub fn ledger(&self) -> &CommLedger {
        &self.ledger
    }

    pub fn send_frame(&mut self, frame: &Frame) -> Result<()> {
        let tx = self
            .to_right
            .as_mut()
            .ok_or_else(|| Error::invalid("single-worker ring has no links"))?;
        tx.send(frame)?;
        self.ledger.record_send(frame);
        Ok(())
    }

    pub fn recv_frame(&mut self) -> Result<Frame> {
        let rx = self
            .from_left
            .as_mut()
            .ok_or_else(|| Error::invalid("single-worker ring has no links"))?;
        let frame = rx.recv()?;
        self.ledger.record_recv(&frame);
        Ok(frame)
    }
}

/// A worker's bidirectional link to the parameter server.
pub struct StarWorkerEndpoint {
    rank: WorkerId,
    to_server: Box<dyn FrameTx>,
    from_server: Box<dyn FrameRx>,
    ledger: CommLedger,
}

impl StarWorkerEndpoint {
    pub(crate) fn new(
        rank: WorkerId,
        to_server: Box<dyn FrameTx>,
        from_server: Box<dyn FrameRx>,
    ) -> Self {
        StarWorkerEndpoint {
            rank,
            to_server,
            from_server,
            ledger: CommLedger::default(),
        }
    }

    pub fn rank(&self) -> WorkerId {
        self.rank
    }

    pub fn ledger(&self) -> &CommLedger {
        &self.ledger
    }

    pub fn send_frame(&mut self, frame: &Frame) -> Result<()> {
        self.to_server.send(frame)?;
        self.ledger.record_send(frame);
        Ok(())
    }

    pub fn recv_frame(&mut self) -> Result<Frame> {
        let frame = self.from_server.recv()?;
        self.ledger.record_recv(&frame);
        Ok(frame)
    }

    /// Tells the server this worker's session is over.
    pub fn send_done(&mut self) -> Result<()> {
        self.send_frame(&Frame::done())
    }
}

/// The server's side of a star: one bidirectional link per worker, processed
/// one frame at a time.
pub struct StarServerEndpoint {
    links: Vec<(Box<dyn FrameTx>, Box<dyn FrameRx>)>,
    ledger: CommLedger,
}

impl StarServerEndpoint {
    pub(crate) fn new(links: Vec<(Box<dyn FrameTx>, Box<dyn FrameRx>)>) -> Self {
        StarServerEndpoint {
            links,
            ledger: CommLedger::default(),
        }
    }

    pub fn worker_count(&self) -> usize {
        self.links.len()
    }

    pub fn ledger(&self) -> &CommLedger {
        &self.ledger
    }

    fn check_rank(&self, rank: usize) -> Result<()> {
        if rank >= self.links.len() {
            return Err(Error::invalid(format!(
                "rank {rank} out of range for {} workers",
                self.links.len()
            )));
        }
        Ok(())
    }

    pub fn send_to(&mut self, rank: usize, frame: &Frame) -> Result<()> {
        self.check_rank(rank)?;
        self.links[rank].0.send(frame)?;
        self.ledger.record_send(frame);
        Ok(())
    }

    pub fn recv_from(&mut self, rank: usize) -> Result<Frame> {
        self.check_rank(rank)?;
        let frame = self.links[rank].1.recv()?;
        self.ledger.record_recv(&frame);
        Ok(frame)
    }
}

/// Which transport a run should use; TCP carries the addresses to use.
#[derive(Clone, Debug)]
pub enum TransportChoice {
    InProcess,
    Tcp(Topology),
}

impl TransportChoice {
    pub fn connect_ring(
        &self,
        config: &ClusterConfig,
        profile: LinkProfile,
    ) -> Result<Vec<RingEndpoint>> {
        match self {
            TransportChoice::InProcess => connect_ring(config, profile),
            TransportChoice::Tcp(topology) => connect_ring_tcp(config, topology, profile),
        }
    }

    pub fn connect_star(
        &self,
        config: &ClusterConfig,
        profile: LinkProfile,
    ) -> Result<(StarServerEndpoint, Vec<StarWorkerEndpoint>)> {
        match self {
            TransportChoice::InProcess => connect_star(config, profile),
            TransportChoice::Tcp(topology) => connect_star_tcp(config, topology, profile),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::ClusterConfig;

    #[test]
    fn ring_links_preserve_fifo_order() {
        let config = ClusterConfig::ring(2).unwrap();
        let mut eps = connect_ring(&config, LinkProfile::ZERO).unwrap();
        for seq in 0..32u16 {
            eps[0]
                .send_frame(&Frame::grad_block(seq, 0, &[f64::from(seq)]))
                .unwrap();
        }
        for seq in 0..32u16 {
            let frame = eps[1].recv_frame().unwrap();
            assert_eq!(frame.round, seq);
        }
    }

    #[test]
    fn ledgers_start_at_zero_and_count_both_ends() {
        let config = ClusterConfig::parameter_server(8).unwrap();
        let (mut server, mut workers) = connect_star(&config, LinkProfile::ZERO).unwrap();
        assert_eq!(server.worker_count(), 8);
        assert_eq!(*server.ledger(), CommLedger::default());
        for w in &workers {
            assert_eq!(*w.ledger(), CommLedger::default());
        }

        workers[3]
            .send_frame(&Frame::grad_block(0, 0, &[1.0, 2.0, 3.0]))
            .unwrap();
        let frame = server.recv_from(3).unwrap();
        assert_eq!(frame.payload, vec![1.0, 2.0, 3.0]);
        assert_eq!(workers[3].ledger().elements_sent, 3);
        assert_eq!(workers[3].ledger().bytes_sent, 24);
        assert_eq!(server.ledger().elements_received, 3);
    }

    #[test]
    fn single_worker_ring_has_no_links() {
        let config = ClusterConfig::ring(1).unwrap();
        let mut eps = connect_ring(&config, LinkProfile::ZERO).unwrap();
        assert_eq!(eps.len(), 1);
        assert!(eps[0].send_frame(&Frame::done()).is_err());
    }

    #[test]
    fn closed_link_reported_on_recv() {
        let config = ClusterConfig::ring(2).unwrap();
        let mut eps = connect_ring(&config, LinkProfile::ZERO).unwrap();
        let last = eps.pop().unwrap();
        drop(eps); // rank 0 gone; rank 1's left link is closed
        let mut last = last;
        assert!(matches!(last.recv_frame().unwrap_err(), Error::LinkClosed));
    }
}
