use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A worker's position in `[0, N)`; the ring neighbors of rank `r` are
/// `(r + 1) % N` (right) and `(r - 1) mod N` (left).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WorkerId {
    rank: usize,
}

impl WorkerId {
    pub fn new(rank: usize) -> Self {
        WorkerId { rank }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }
}

impl std::fmt::Display for WorkerId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "rank {}", self.rank)
    }
}

/// How workers synchronize gradients.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Ring all-reduce: scatter-reduce then all-gather around a ring.
    Ring,
    /// Central server aggregates and broadcasts back.
    ParameterServer,
}

/// Elementwise reduction applied across worker buffers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReduceOp {
    Sum,
    /// Sum divided by the worker count, exactly once per element.
    Mean,
}

/// Static description of one synchronization cluster.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClusterConfig {
    pub worker_count: usize,
    pub strategy: Strategy,
    pub reduce_op: ReduceOp,
}

impl ClusterConfig {
    pub fn new(worker_count: usize, strategy: Strategy, reduce_op: ReduceOp) -> Result<Self> {
        if worker_count == 0 {
            return Err(Error::invalid("worker_count must be at least 1"));
        }
        Ok(ClusterConfig {
            worker_count,
            strategy,
            reduce_op,
        })
    }

    pub fn ring(worker_count: usize) -> Result<Self> {
        Self::new(worker_count, Strategy::Ring, ReduceOp::Sum)
    }

    pub fn parameter_server(worker_count: usize) -> Result<Self> {
        Self::new(worker_count, Strategy::ParameterServer, ReduceOp::Sum)
    }

    pub fn with_reduce_op(mut self, op: ReduceOp) -> Self {
        self.reduce_op = op;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_workers_rejected() {
        assert!(ClusterConfig::ring(0).is_err());
        assert!(ClusterConfig::parameter_server(0).is_err());
        assert!(ClusterConfig::ring(1).is_ok());
    }
}
