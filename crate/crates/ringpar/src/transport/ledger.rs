use serde::Serialize;

use crate::transport::frame::{Frame, HEADER_LEN};

/// Per-endpoint traffic counters, updated on every send and receive.
///
/// Byte counters track payload only; headers are accounted separately so
/// element and byte counts stay in exact 1:8 correspondence.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CommLedger {
    pub elements_sent: u64,
    pub elements_received: u64,
    pub bytes_sent: u64,
    pub bytes_received: u64,
    pub header_bytes_sent: u64,
    pub frames_sent: u64,
    pub frames_received: u64,
}

impl CommLedger {
    pub fn record_send(&mut self, frame: &Frame) {
        self.elements_sent += frame.payload.len() as u64;
        self.bytes_sent += frame.payload_bytes() as u64;
        self.header_bytes_sent += HEADER_LEN as u64;
        self.frames_sent += 1;
    }

    pub fn record_recv(&mut self, frame: &Frame) {
        self.elements_received += frame.payload.len() as u64;
        self.bytes_received += frame.payload_bytes() as u64;
        self.frames_received += 1;
    }

    /// Folds another ledger into this one (used to aggregate per-run totals).
    pub fn merge(&mut self, other: &CommLedger) {
        self.elements_sent += other.elements_sent;
        self.elements_received += other.elements_received;
        self.bytes_sent += other.bytes_sent;
        self.bytes_received += other.bytes_received;
        self.header_bytes_sent += other.header_bytes_sent;
        self.frames_sent += other.frames_sent;
        self.frames_received += other.frames_received;
    }
}
